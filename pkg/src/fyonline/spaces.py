"""Structured output spaces: vertex sets, convex hulls, and exact oracles.

Each space is a finite set of vertices embedded in ``R^dim`` together with the
norm its geometry is measured in.  Three primitives are exact and deterministic:

* ``linear_oracle(c)``: a vertex minimizing ``<c, y>``; ties go to the first
  vertex in the space's deterministic enumeration order.
* ``nearest_vertex(p)``: a vertex closest to a hull point in the space norm.
  For 0/1 polytopes this reduces to one linear-oracle call on the
  per-coordinate cost ``|1 - p_i|^q - |p_i|^q`` (q the norm exponent); for the
  permutahedron it is rank assignment by stable sorting.
* ``enumerate_vertices()``: the enumeration itself, capped at
  ``ENUMERATION_CAP`` vertices, which brute-force checks replay against.

Derived geometric constants are exposed as attributes: ``nu`` (minimum
distance between distinct vertices), ``diameter`` (hull diameter), both in the
space norm, and ``kappa`` such that ``kappa * ||.|| >= ||.||_2`` (1 for the
built-in norms).

Hull points carrying small numerical violation (up to ``TAU_HULL`` in l1
magnitude) are clamped onto the hull before use; larger violations raise
:class:`~fyonline.errors.InputError`.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linear_sum_assignment, nnls

from .errors import CapacityError, InputError
from .validation import as_vector

TAU_HULL = 1e-8
ENUMERATION_CAP = 100_000


class OutputSpace:
    """Base class; concrete spaces fill in the geometry and oracles."""

    kind: str = ""

    def __init__(self, dim: int, norm: str, nu: float, diameter: float):
        if norm not in ("l1", "l2"):
            raise InputError(f"unknown norm tag {norm!r}")
        self.dim = int(dim)
        self.norm = norm
        self.nu = float(nu)
        self.diameter = float(diameter)
        self.kappa = 1.0  # both built-in norms dominate l2 with constant 1

    # -- norm helpers ------------------------------------------------------

    def norm_of(self, v) -> float:
        v = np.asarray(v, dtype=np.float64)
        if self.norm == "l1":
            return float(np.abs(v).sum())
        return float(np.sqrt((v * v).sum()))

    def distance(self, p, q) -> float:
        return self.norm_of(np.asarray(p, dtype=np.float64) - np.asarray(q, dtype=np.float64))

    # -- hull handling -----------------------------------------------------

    def hull_violation(self, p) -> float:
        """l1 magnitude of constraint violation of ``p`` w.r.t. the hull."""
        raise NotImplementedError

    def clamp_to_hull(self, p) -> np.ndarray:
        """Move an in-band point exactly onto (or no further from) the hull."""
        raise NotImplementedError

    def check_hull_point(self, p, name: str = "p") -> np.ndarray:
        p = as_vector(p, self.dim, name)
        violation = self.hull_violation(p)
        if violation > TAU_HULL:
            raise InputError(
                f"{name} violates the hull constraints by {violation:.3e} "
                f"(allowed {TAU_HULL:.0e})"
            )
        return self.clamp_to_hull(p)

    # -- oracles -----------------------------------------------------------

    def linear_oracle(self, c) -> np.ndarray:
        raise NotImplementedError

    def nearest_vertex(self, p) -> np.ndarray:
        raise NotImplementedError

    def _binary_nearest(self, p: np.ndarray) -> np.ndarray:
        # 0/1 polytopes: nearest vertex minimizes sum_i |y_i - p_i|^q, and for
        # y_i in {0,1} the coordinate cost difference is |1-p_i|^q - |p_i|^q.
        q = 1 if self.norm == "l1" else 2
        cost = np.abs(1.0 - p) ** q - np.abs(p) ** q
        return self.linear_oracle(cost)

    # -- enumeration -------------------------------------------------------

    @property
    def vertex_count(self) -> int:
        raise NotImplementedError

    def _check_capacity(self):
        if self.vertex_count > ENUMERATION_CAP:
            raise CapacityError(
                f"{self.kind} space has {self.vertex_count} vertices, "
                f"enumeration is capped at {ENUMERATION_CAP}"
            )

    def enumerate_vertices(self) -> np.ndarray:
        raise NotImplementedError

    def random_vertex(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    # -- frontier geometry -------------------------------------------------

    def score_margin(self, theta) -> float:
        """Smallest normalized score gap ``<theta, y* - y'> / ||y* - y'||_2``.

        ``y*`` is the linear-oracle argmax of ``<theta, .>``.  The margin is 0
        exactly when the argmax is not unique; streams built on a fixed linear
        map reject inputs whose margin falls below their threshold.  Default
        implementation enumerates; subclasses override with closed forms.
        """
        theta = as_vector(theta, self.dim, "theta")
        vertices = self.enumerate_vertices()
        scores = vertices @ theta
        best = int(np.argmax(scores))
        y_star = vertices[best]
        diff = y_star - np.delete(vertices, best, axis=0)
        gaps = scores[best] - np.delete(scores, best)
        norms = np.sqrt((diff * diff).sum(axis=1))
        return float(np.min(gaps / norms))

    def max_vertex_l2(self) -> float:
        vertices = self.enumerate_vertices()
        return float(np.sqrt((vertices * vertices).sum(axis=1).max()))

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Simplex(OutputSpace):
    """Standard basis vectors ``e_1 .. e_d`` with the l1 norm."""

    kind = "simplex"

    def __init__(self, d: int):
        d = int(d)
        if d < 2:
            raise InputError("simplex needs d >= 2")
        super().__init__(d, "l1", nu=2.0, diameter=2.0)

    def hull_violation(self, p):
        p = np.asarray(p, dtype=np.float64)
        return float(np.clip(-p, 0.0, None).sum() + abs(p.sum() - 1.0))

    def clamp_to_hull(self, p):
        p = np.clip(np.asarray(p, dtype=np.float64), 0.0, None)
        total = p.sum()
        if total <= 0.0:
            return np.full(self.dim, 1.0 / self.dim)
        return p / total

    def linear_oracle(self, c):
        c = as_vector(c, self.dim, "c")
        out = np.zeros(self.dim)
        out[int(np.argmin(c))] = 1.0  # argmin returns the first minimizer
        return out

    def nearest_vertex(self, p):
        p = self.check_hull_point(p)
        return self._binary_nearest(p)

    @property
    def vertex_count(self):
        return self.dim

    def enumerate_vertices(self):
        self._check_capacity()
        return np.eye(self.dim)

    def random_vertex(self, rng):
        out = np.zeros(self.dim)
        out[int(rng.integers(self.dim))] = 1.0
        return out

    def score_margin(self, theta):
        theta = as_vector(theta, self.dim, "theta")
        best = int(np.argmax(theta))
        gaps = theta[best] - np.delete(theta, best)
        return float(gaps.min() / math.sqrt(2.0))

    def max_vertex_l2(self):
        return 1.0

    def to_json(self):
        return {"kind": "simplex", "d": self.dim}


class Hypercube(OutputSpace):
    """All 0/1 vectors of length d with the l2 norm."""

    kind = "hypercube"

    def __init__(self, d: int):
        d = int(d)
        if d < 1:
            raise InputError("hypercube needs d >= 1")
        super().__init__(d, "l2", nu=1.0, diameter=math.sqrt(d))

    def hull_violation(self, p):
        p = np.asarray(p, dtype=np.float64)
        return float(np.clip(-p, 0.0, None).sum() + np.clip(p - 1.0, 0.0, None).sum())

    def clamp_to_hull(self, p):
        return np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)

    def linear_oracle(self, c):
        c = as_vector(c, self.dim, "c")
        # zero cost keeps the coordinate at 0: the lexicographically first
        # vertex in enumeration order among the minimizers
        return (c < 0.0).astype(np.float64)

    def nearest_vertex(self, p):
        p = self.check_hull_point(p)
        return self._binary_nearest(p)

    @property
    def vertex_count(self):
        return 2 ** self.dim

    def enumerate_vertices(self):
        self._check_capacity()
        bits = list(itertools.product((0.0, 1.0), repeat=self.dim))
        return np.array(bits)

    def random_vertex(self, rng):
        return rng.integers(0, 2, self.dim).astype(np.float64)

    def score_margin(self, theta):
        # flipping a set S costs sum_{i in S} |theta_i| over sqrt(|S|);
        # the minimum over nonempty S is attained at a single flip
        theta = as_vector(theta, self.dim, "theta")
        return float(np.abs(theta).min())

    def max_vertex_l2(self):
        return math.sqrt(self.dim)

    def to_json(self):
        return {"kind": "hypercube", "d": self.dim}


class Birkhoff(OutputSpace):
    """Row-major vectorized n-by-n permutation matrices with the l1 norm."""

    kind = "birkhoff"

    def __init__(self, n: int):
        n = int(n)
        if n < 2:
            raise InputError("birkhoff needs n >= 2")
        self.n = n
        # distinct permutations differ in >= 2 rows, 2 units of l1 mass each
        super().__init__(n * n, "l1", nu=4.0, diameter=2.0 * n)

    def _matrix(self, p):
        return np.asarray(p, dtype=np.float64).reshape(self.n, self.n)

    def hull_violation(self, p):
        P = self._matrix(p)
        neg = np.clip(-P, 0.0, None).sum()
        rows = np.abs(P.sum(axis=1) - 1.0).sum()
        cols = np.abs(P.sum(axis=0) - 1.0).sum()
        return float(neg + rows + cols)

    def clamp_to_hull(self, p):
        P = np.clip(self._matrix(p), 0.0, 1.0)
        for _ in range(50):
            rows = P.sum(axis=1, keepdims=True)
            if np.any(rows < 1e-300):
                P = np.where(rows < 1e-300, 1.0 / self.n, P)
                rows = P.sum(axis=1, keepdims=True)
            P = P / rows
            cols = P.sum(axis=0, keepdims=True)
            P = P / cols
            dev = max(np.abs(P.sum(axis=1) - 1.0).max(), np.abs(P.sum(axis=0) - 1.0).max())
            if dev <= 1e-14:
                break
        return P.reshape(-1)

    def permutation_vertex(self, perm) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        out[np.arange(self.n), np.asarray(perm, dtype=int)] = 1.0
        return out.reshape(-1)

    def linear_oracle(self, c):
        c = as_vector(c, self.dim, "c")
        C = self._matrix(c)
        rows, cols = linear_sum_assignment(C)
        best = float(C[rows, cols].sum())
        # refine to the lexicographically smallest optimal assignment (the
        # first one in enumeration order); equality is checked with a small
        # relative band because subproblem costs re-sum the same floats
        tol = 1e-12 * max(1.0, abs(best))
        perm = np.empty(self.n, dtype=int)
        avail = list(range(self.n))
        prefix = 0.0
        for i in range(self.n):
            for j in avail:
                rest_rows = np.arange(i + 1, self.n)
                rest_cols = [k for k in avail if k != j]
                if len(rest_cols):
                    sub = C[np.ix_(rest_rows, rest_cols)]
                    sr, sc = linear_sum_assignment(sub)
                    rest = float(sub[sr, sc].sum())
                else:
                    rest = 0.0
                if prefix + C[i, j] + rest <= best + tol:
                    perm[i] = j
                    prefix += C[i, j]
                    avail.remove(j)
                    break
            else:
                raise RuntimeError("assignment refinement failed")  # pragma: no cover
        return self.permutation_vertex(perm)

    def nearest_vertex(self, p):
        p = self.check_hull_point(p)
        return self._binary_nearest(p)

    @property
    def vertex_count(self):
        return math.factorial(self.n)

    def enumerate_vertices(self):
        self._check_capacity()
        return np.array(
            [self.permutation_vertex(perm) for perm in itertools.permutations(range(self.n))]
        )

    def random_vertex(self, rng):
        return self.permutation_vertex(rng.permutation(self.n))

    def max_vertex_l2(self):
        return math.sqrt(self.n)

    def to_json(self):
        return {"kind": "birkhoff", "n": self.n}


class Permutahedron(OutputSpace):
    """All permutations of ``(1, ..., d)`` with the l2 norm."""

    kind = "permutahedron"

    def __init__(self, d: int):
        d = int(d)
        if d < 2:
            raise InputError("permutahedron needs d >= 2")
        # adjacent transposition of values k, k+1 has l2 distance sqrt(2);
        # the diameter is attained by the full reversal
        diameter = math.sqrt(d * (d * d - 1) / 3.0)
        super().__init__(d, "l2", nu=math.sqrt(2.0), diameter=diameter)

    def hull_violation(self, p):
        p = np.asarray(p, dtype=np.float64)
        d = self.dim
        desc = np.sort(p)[::-1]
        top = np.arange(d, 0, -1, dtype=np.float64)  # d, d-1, ..., 1
        excess = np.clip(np.cumsum(desc)[:-1] - np.cumsum(top)[:-1], 0.0, None).sum()
        total = abs(p.sum() - d * (d + 1) / 2.0)
        return float(excess + total)

    def clamp_to_hull(self, p):
        # distances and rank assignment are insensitive to in-band violation
        return np.asarray(p, dtype=np.float64).copy()

    def linear_oracle(self, c):
        c = as_vector(c, self.dim, "c")
        # pair the largest cost with the smallest value; stable sort gives the
        # smaller value to the earlier index inside tie groups, which is the
        # first optimal vertex in enumeration order
        order = np.argsort(-c, kind="stable")
        out = np.empty(self.dim)
        out[order] = np.arange(1, self.dim + 1, dtype=np.float64)
        return out

    def nearest_vertex(self, p):
        p = self.check_hull_point(p)
        order = np.argsort(p, kind="stable")
        out = np.empty(self.dim)
        out[order] = np.arange(1, self.dim + 1, dtype=np.float64)
        return out

    @property
    def vertex_count(self):
        return math.factorial(self.dim)

    def enumerate_vertices(self):
        self._check_capacity()
        return np.array(
            [perm for perm in itertools.permutations(range(1, self.dim + 1))],
            dtype=np.float64,
        )

    def random_vertex(self, rng):
        return rng.permutation(np.arange(1, self.dim + 1, dtype=np.float64))

    def max_vertex_l2(self):
        d = self.dim
        return math.sqrt(d * (d + 1) * (2 * d + 1) / 6.0)

    def to_json(self):
        return {"kind": "permutahedron", "d": self.dim}


class OrdinalChain(OutputSpace):
    """Prefix-indicator vertices ``0, e_1, e_1+e_2, ..., 1`` with the l2 norm."""

    kind = "ordinal_chain"

    def __init__(self, d: int):
        d = int(d)
        if d < 1:
            raise InputError("ordinal chain needs d >= 1")
        super().__init__(d, "l2", nu=1.0, diameter=math.sqrt(d))

    def prefix_vertex(self, k: int) -> np.ndarray:
        out = np.zeros(self.dim)
        out[:k] = 1.0
        return out

    def hull_violation(self, p):
        p = np.asarray(p, dtype=np.float64)
        box = np.clip(-p, 0.0, None).sum() + np.clip(p - 1.0, 0.0, None).sum()
        mono = np.clip(np.diff(p), 0.0, None).sum()
        return float(box + mono)

    def clamp_to_hull(self, p):
        p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
        return np.minimum.accumulate(p)

    def linear_oracle(self, c):
        c = as_vector(c, self.dim, "c")
        prefix = np.concatenate(([0.0], np.cumsum(c)))
        return self.prefix_vertex(int(np.argmin(prefix)))

    def nearest_vertex(self, p):
        p = self.check_hull_point(p)
        return self._binary_nearest(p)

    @property
    def vertex_count(self):
        return self.dim + 1

    def enumerate_vertices(self):
        self._check_capacity()
        return np.array([self.prefix_vertex(k) for k in range(self.dim + 1)])

    def random_vertex(self, rng):
        return self.prefix_vertex(int(rng.integers(self.dim + 1)))

    def score_margin(self, theta):
        theta = as_vector(theta, self.dim, "theta")
        prefix = np.concatenate(([0.0], np.cumsum(theta)))
        best = int(np.argmax(prefix))
        ks = np.delete(np.arange(self.dim + 1), best)
        gaps = prefix[best] - np.delete(prefix, best)
        return float(np.min(gaps / np.sqrt(np.abs(ks - best))))

    def max_vertex_l2(self):
        return math.sqrt(self.dim)

    def to_json(self):
        return {"kind": "ordinal_chain", "d": self.dim}


class Enumerated(OutputSpace):
    """An explicit vertex list with either norm."""

    kind = "enumerated"

    def __init__(self, vertices, norm: str = "l2"):
        vertices = np.asarray(vertices, dtype=np.float64)
        if vertices.ndim != 2 or vertices.shape[0] < 2:
            raise InputError("enumerated space needs a 2-d array of >= 2 vertices")
        if not np.all(np.isfinite(vertices)):
            raise InputError("vertices contain non-finite entries")
        if len({v.tobytes() for v in vertices}) != vertices.shape[0]:
            raise InputError("enumerated vertices must be distinct")
        if vertices.shape[0] > 2000:
            raise CapacityError("enumerated space limited to 2000 vertices")
        self.vertices = vertices
        # nu and the diameter by pairwise scan (the cap above bounds the cost)
        nu = math.inf
        diameter = 0.0
        for i in range(vertices.shape[0] - 1):
            d_ij = vertices[i] - vertices[i + 1 :]
            if norm == "l1":
                dist = np.abs(d_ij).sum(axis=1)
            else:
                dist = np.sqrt((d_ij * d_ij).sum(axis=1))
            nu = min(nu, float(dist.min()))
            diameter = max(diameter, float(dist.max()))
        super().__init__(vertices.shape[1], norm, nu=nu, diameter=diameter)

    def hull_violation(self, p):
        p = np.asarray(p, dtype=np.float64)
        w, _ = self._fit_weights(p)
        recon = self.vertices.T @ w
        return float(np.abs(recon - p).sum())

    def _fit_weights(self, p):
        # nonnegative least squares on [V^T; 1] against [p; 1], renormalized
        A = np.vstack([self.vertices.T, np.ones(self.vertices.shape[0])])
        b = np.concatenate([p, [1.0]])
        w, res = nnls(A, b)
        total = w.sum()
        if total > 0:
            w = w / total
        return w, res

    def clamp_to_hull(self, p):
        p = np.asarray(p, dtype=np.float64)
        w, _ = self._fit_weights(p)
        return self.vertices.T @ w

    def linear_oracle(self, c):
        c = as_vector(c, self.dim, "c")
        return self.vertices[int(np.argmin(self.vertices @ c))].copy()

    def nearest_vertex(self, p):
        p = self.check_hull_point(p)
        diff = self.vertices - p
        if self.norm == "l1":
            dist = np.abs(diff).sum(axis=1)
        else:
            dist = (diff * diff).sum(axis=1)
        return self.vertices[int(np.argmin(dist))].copy()

    @property
    def vertex_count(self):
        return self.vertices.shape[0]

    def enumerate_vertices(self):
        return self.vertices.copy()

    def random_vertex(self, rng):
        return self.vertices[int(rng.integers(self.vertices.shape[0]))].copy()

    def to_json(self):
        return {"kind": "enumerated", "vertices": self.vertices.tolist(), "norm": self.norm}


_KINDS = {
    "simplex": lambda desc: Simplex(desc["d"]),
    "hypercube": lambda desc: Hypercube(desc["d"]),
    "birkhoff": lambda desc: Birkhoff(desc["n"]),
    "permutahedron": lambda desc: Permutahedron(desc["d"]),
    "ordinal_chain": lambda desc: OrdinalChain(desc["d"]),
    "enumerated": lambda desc: Enumerated(desc["vertices"], desc.get("norm", "l2")),
}


def space_from_json(desc: dict) -> OutputSpace:
    """Build a space from its JSON descriptor ``{"kind": ..., ...}``."""
    try:
        kind = desc["kind"]
    except (TypeError, KeyError):
        raise InputError("space descriptor must be a dict with a 'kind' field") from None
    try:
        factory = _KINDS[kind]
    except KeyError:
        raise InputError(f"unknown space kind {kind!r}") from None
    try:
        return factory(desc)
    except KeyError as exc:
        raise InputError(f"space descriptor for {kind!r} is missing field {exc}") from None
