import math

import numpy as np
import pytest

from fyonline import (
    ConfigurationError,
    EntropySimplex,
    GenerationError,
    Simplex,
    builtin_loss,
    builtin_triple,
    generate_linear_model_stream,
    generate_lower_bound_stream,
    generate_separable_stream,
    lower_bound_round_count,
    random_planted_matrix,
)

U0_BINARY = np.array([[1.0, 0.5], [-1.0, -0.5]])


class TestLinearModelStream:
    def test_shapes_and_budget(self):
        space, _, _ = builtin_triple("multiclass", d=3)
        st = generate_linear_model_stream(space, n_features=4, T=100, C=2.0, seed=0)
        assert st.xs.shape == (100, 4)
        assert st.ys.shape == (100, 3)
        assert np.linalg.norm(st.xs, axis=1).max() <= 2.0 + 1e-9

    def test_labels_are_vertices(self):
        space, _, _ = builtin_triple("multiclass", d=3)
        st = generate_linear_model_stream(space, n_features=4, T=50, seed=1)
        verts = space.enumerate_vertices()
        for y in st.ys:
            assert any(np.array_equal(y, v) for v in verts)

    def test_planted_norm_matches_scale(self):
        space, _, _ = builtin_triple("multiclass", d=3)
        st = generate_linear_model_stream(space, n_features=4, T=10, u_scale=2.5, seed=2)
        assert np.linalg.norm(st.U_planted) == pytest.approx(2.5)

    def test_same_seed_reproduces(self):
        space, _, _ = builtin_triple("multiclass", d=4)
        a = generate_linear_model_stream(space, n_features=3, T=40, seed=9)
        b = generate_linear_model_stream(space, n_features=3, T=40, seed=9)
        np.testing.assert_array_equal(a.xs, b.xs)
        np.testing.assert_array_equal(a.ys, b.ys)
        np.testing.assert_array_equal(a.U_planted, b.U_planted)

    def test_noise_flips_some_labels(self):
        space, _, _ = builtin_triple("multiclass", d=3)
        clean = generate_linear_model_stream(space, n_features=4, T=300, seed=4)
        noisy = generate_linear_model_stream(
            space, n_features=4, T=300, noise=0.5, seed=4
        )
        assert any(
            not np.array_equal(a, b) for a, b in zip(clean.ys, noisy.ys)
        )


class TestSeparableStream:
    def test_margin_floor_is_enforced(self):
        """Emitted scores stay at distance >= t0 from the decision frontier."""
        space = Simplex(2)
        st = generate_separable_stream(space, U0_BINARY, t0=0.3, T=200, seed=0)
        for x in st.xs:
            theta = U0_BINARY @ x
            assert abs(theta[0] - theta[1]) / math.sqrt(2.0) >= 0.3

    def test_zero_threshold_keeps_everything(self):
        space = Simplex(2)
        st = generate_separable_stream(space, U0_BINARY, t0=0.0, T=50, seed=1)
        assert st.T == 50

    def test_labels_agree_with_the_planted_scorer(self):
        space = Simplex(2)
        loss = builtin_loss(space, "zero_one")
        st = generate_separable_stream(space, U0_BINARY, t0=0.2, T=150, seed=2)
        for x, y in zip(st.xs, st.ys):
            best = space.linear_oracle(-(U0_BINARY @ x))
            assert loss.eval(best, y) == 0.0

    def test_impossible_margin_exhausts_the_budget(self):
        space = Simplex(2)
        with pytest.raises(GenerationError):
            generate_separable_stream(
                space, U0_BINARY, t0=5.0, T=10, seed=0, budget_factor=2
            )


class TestLowerBoundStream:
    def test_round_count_arithmetic(self):
        # (900 - ln^2(2e4)) / ln^2(4), floored
        assert lower_bound_round_count(2, 10000, 30.0) == 417

    def test_round_count_requires_room(self):
        with pytest.raises(ConfigurationError):
            lower_bound_round_count(2, 10, 1.0)

    def test_planted_norm_identity(self):
        st = generate_lower_bound_stream(2, 10000, 30.0, seed=0)
        M = st.meta["M"]
        frob_sq = float(np.sum(st.U_planted * st.U_planted))
        expected = M * math.log(4.0) ** 2 + math.log(2.0e4) ** 2
        assert frob_sq == pytest.approx(expected, abs=1e-9)
        assert frob_sq <= 900.0

    def test_comparator_round_loss_stays_below_half_the_target(self):
        d = 2
        st = generate_lower_bound_stream(d, 10000, 30.0, seed=0)
        reg = EntropySimplex(Simplex(d), log_base2=False)
        M = st.meta["M"]
        per_round = math.log(1.0 + (d - 1) / (2.0 * d))
        for t in range(M):
            s = reg.fy_loss(st.U_planted @ st.xs[t], st.ys[t])
            assert s == pytest.approx(per_round, abs=1e-9)
        assert per_round <= 0.5 * (1.0 - 1.0 / d)

    def test_inputs_walk_the_coordinates(self):
        st = generate_lower_bound_stream(2, 10000, 30.0, seed=0)
        M = st.meta["M"]
        for t in range(M):
            assert st.xs[t, t] == 1.0
            assert np.sum(st.xs[t]) == 1.0
        # rounds past M repeat the final coordinate
        assert st.xs[M, M] == 1.0
        assert st.xs[-1, M] == 1.0

    def test_label_seeds_differ(self):
        a = generate_lower_bound_stream(2, 10000, 30.0, seed=0)
        b = generate_lower_bound_stream(2, 10000, 30.0, seed=1)
        assert not np.array_equal(a.ys, b.ys)
        np.testing.assert_array_equal(a.xs, b.xs)


def test_random_planted_matrix_norm_and_shape():
    U = random_planted_matrix(Simplex(3), 5, 2.0, seed=0)
    assert U.shape == (3, 5)
    assert np.linalg.norm(U) == pytest.approx(2.0)
