import math

import numpy as np
import pytest

from fyonline import (
    Birkhoff,
    ConfigurationError,
    ConvergenceError,
    CrfEnumerable,
    EntropySimplex,
    Hypercube,
    OrdinalChain,
    Permutahedron,
    QuadraticRegularizer,
    ScaledEntropyBirkhoff,
    Simplex,
    regularizer_from_json,
)

LN2 = math.log(2.0)


ALL_KINDS = [
    EntropySimplex(Simplex(4), log_base2=True),
    QuadraticRegularizer(Hypercube(4)),
    ScaledEntropyBirkhoff(Birkhoff(3)),
    QuadraticRegularizer(Permutahedron(4)),
    QuadraticRegularizer(OrdinalChain(5)),
    CrfEnumerable(Simplex(4)),
]


def _ids(reg):
    return f"{reg.kind}_{reg.space.kind}"


def test_entropy_uniform_at_zero_scores():
    reg = EntropySimplex(Simplex(2))
    np.testing.assert_allclose(reg.predict(np.zeros(2)).y_hat, [0.5, 0.5])


def test_entropy_closed_form_point():
    reg = EntropySimplex(Simplex(2))
    theta = np.array([1.0, 1.0 + math.log(3.0)])
    np.testing.assert_allclose(reg.predict(theta).y_hat, [0.25, 0.75], atol=1e-14)


def test_scaled_entropy_symmetric_at_zero():
    reg = ScaledEntropyBirkhoff(Birkhoff(2))
    np.testing.assert_allclose(reg.predict(np.zeros(4)).y_hat, [0.5, 0.5, 0.5, 0.5], atol=1e-10)


def test_quadratic_prediction_is_the_clip():
    reg = QuadraticRegularizer(Hypercube(2))
    np.testing.assert_allclose(reg.predict(np.array([0.3, -0.2])).y_hat, [0.3, 0.0])


def test_entropy_base2_loss_at_uniform():
    reg = EntropySimplex(Simplex(2), log_base2=True)
    assert reg.fy_loss(np.zeros(2), np.eye(2)[0]) == pytest.approx(1.0, abs=1e-12)


def test_entropy_base_e_loss_closed_form():
    reg = EntropySimplex(Simplex(2))
    theta = np.array([1.0, 1.0 + math.log(3.0)])
    assert reg.fy_loss(theta, np.eye(2)[0]) == pytest.approx(2.0 * LN2, abs=1e-12)


def test_quadratic_loss_zero_at_offset_vertex():
    # theta = 2y - 1/2 projects exactly onto the vertex y
    reg = QuadraticRegularizer(Hypercube(3))
    y = np.array([1.0, 0.0, 1.0])
    theta = 2.0 * y - 0.5
    np.testing.assert_allclose(reg.predict(theta).y_hat, y, atol=1e-12)
    assert reg.fy_loss(theta, y) == pytest.approx(0.0, abs=1e-12)


def test_gradient_is_residual_at_uniform():
    reg = EntropySimplex(Simplex(2))
    np.testing.assert_allclose(
        reg.fy_gradient(np.zeros(2), np.eye(2)[0]), [-0.5, 0.5], atol=1e-14
    )


def test_gradient_base2_carries_the_scale():
    reg = EntropySimplex(Simplex(2), log_base2=True)
    np.testing.assert_allclose(
        reg.fy_gradient(np.zeros(2), np.eye(2)[0]),
        np.array([-0.5, 0.5]) / LN2,
        atol=1e-14,
    )


def test_gradient_vanishes_when_prediction_hits_label():
    reg = QuadraticRegularizer(Hypercube(3))
    y = np.array([0.0, 1.0, 0.0])
    theta = 2.0 * y - 0.5
    np.testing.assert_allclose(reg.fy_gradient(theta, y), np.zeros(3), atol=1e-12)


def test_gradient_softmax_residual_d3():
    reg = EntropySimplex(Simplex(3))
    theta = np.array([1.0, 0.0, 0.0])
    z = np.exp(theta)
    softmax = z / z.sum()
    np.testing.assert_allclose(
        reg.fy_gradient(theta, np.eye(3)[1]), softmax - np.eye(3)[1], atol=1e-12
    )


@pytest.mark.parametrize("reg", ALL_KINDS, ids=_ids)
def test_loss_nonnegative_and_zero_iff_prediction_is_label(reg):
    rng = np.random.default_rng(4)
    space = reg.space
    verts = space.enumerate_vertices()
    for _ in range(40):
        theta = rng.standard_normal(space.dim)
        y = verts[rng.integers(len(verts))]
        assert reg.fy_loss(theta, y) >= -1e-12


@pytest.mark.parametrize("reg", ALL_KINDS, ids=_ids)
def test_gradient_matches_finite_differences(reg):
    rng = np.random.default_rng(8)
    space = reg.space
    verts = space.enumerate_vertices()
    h = 1e-6
    for _ in range(5):
        theta = rng.standard_normal(space.dim)
        y = verts[rng.integers(len(verts))]
        grad = reg.fy_gradient(theta, y)
        for j in range(space.dim):
            e = np.zeros(space.dim)
            e[j] = h
            fd = (reg.fy_loss(theta + e, y) - reg.fy_loss(theta - e, y)) / (2.0 * h)
            assert fd == pytest.approx(grad[j], abs=2e-5)


@pytest.mark.parametrize("reg", ALL_KINDS, ids=_ids)
def test_predictions_stay_in_hull(reg):
    rng = np.random.default_rng(13)
    for scale in (0.5, 2.0):
        theta = scale * rng.standard_normal(reg.space.dim)
        y_hat = reg.predict(theta).y_hat
        assert reg.space.hull_violation(y_hat) <= 1e-7


def test_matrix_scaling_reports_nonconvergence():
    reg = ScaledEntropyBirkhoff(Birkhoff(3))
    theta = 40.0 * np.random.default_rng(1).standard_normal(9)
    with pytest.raises(ConvergenceError) as exc:
        reg.predict(theta)
    assert exc.value.residual > 0.0


def test_scaled_entropy_requires_birkhoff():
    with pytest.raises(ConfigurationError):
        ScaledEntropyBirkhoff(Simplex(4))


def test_scaled_entropy_mu_controls_curvature():
    assert ScaledEntropyBirkhoff(Birkhoff(3), mu=1.0).lam == pytest.approx(1.0 / 3.0)
    assert ScaledEntropyBirkhoff(Birkhoff(3), mu=0.5).lam == pytest.approx(2.0 / 3.0)


def test_crf_matches_entropy_on_the_simplex():
    """Enumerated exponential weights reduce to softmax on the simplex."""
    crf = CrfEnumerable(Simplex(4))
    ent = EntropySimplex(Simplex(4))
    rng = np.random.default_rng(21)
    for _ in range(10):
        theta = rng.standard_normal(4)
        np.testing.assert_allclose(
            crf.predict(theta).y_hat, ent.predict(theta).y_hat, atol=1e-10
        )


@pytest.mark.parametrize("reg", ALL_KINDS, ids=_ids)
def test_regularizer_json_roundtrip(reg):
    reg2 = regularizer_from_json(reg.space, reg.to_json())
    assert reg2.kind == reg.kind
    assert reg2.lam == pytest.approx(reg.lam)
    rng = np.random.default_rng(17)
    theta = rng.standard_normal(reg.space.dim)
    np.testing.assert_allclose(reg2.predict(theta).y_hat, reg.predict(theta).y_hat, atol=1e-10)


def test_quadratic_warm_start_agrees_with_cold_projection():
    # permutahedron projection with and without an isotonic warm start
    reg = QuadraticRegularizer(Permutahedron(5))
    rng = np.random.default_rng(29)
    for _ in range(20):
        theta = 3.0 * rng.standard_normal(5)
        y_hat = reg.predict(theta).y_hat
        # optimality: the projection is the closest hull point among probes
        base = np.linalg.norm(y_hat - theta)
        verts = reg.space.enumerate_vertices()
        w = rng.dirichlet(np.ones(len(verts)))
        probe = w @ verts
        assert base <= np.linalg.norm(probe - theta) + 1e-9
