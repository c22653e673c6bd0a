"""Saddle-point problem models, constructors, solution-set oracles, fixtures.

The structured class is min_x max_y h(C1 x) + <A x, y> - g(C2 y) with
h(u) = 0.5 ||u - b1||^2 and g(u) = 0.5 ||u - b2||^2, optionally over
polyhedral sets {G x <= a}, {F y <= c}.  Random instances are generated with
a counter-based PRNG (numpy Philox keyed by SeedSequence(seed)) so that the
same seed reproduces the same matrices on every platform; draw order is
C1, C2, b1, b2, A.
"""

import json
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError, SolveError
from .geometry import SimpleSet, project_polyhedron, _as_vector

_RANK_TOL = 1e-10


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


@dataclass(frozen=True)
class SmoothnessConstants:
    """Gradient Lipschitz constants of the convex-concave smoothness model."""

    L_xx: float
    L_xy: float
    L_yx: float
    L_yy: float

    def __post_init__(self):
        vals = (self.L_xx, self.L_xy, self.L_yx, self.L_yy)
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise ValueError("smoothness constants must be finite and nonnegative")
        if not self.L_yx > 0:
            raise ValueError("L_yx must be strictly positive")


class SaddleProblem:
    """Convex-concave problem min_{x in X} max_{y in Y} f(x, y).

    Evaluators are pure functions; instances are immutable after construction
    and safe to share across threads.
    """

    def __init__(self, dim_x, dim_y, eval_f, grad_x, grad_y,
                 set_x: SimpleSet, set_y: SimpleSet,
                 smoothness: SmoothnessConstants, name: str = "custom"):
        self.dim_x = int(dim_x)
        self.dim_y = int(dim_y)
        self._eval_f = eval_f
        self._grad_x = grad_x
        self._grad_y = grad_y
        self.set_x = set_x
        self.set_y = set_y
        self.smoothness = smoothness
        self.name = name

    def split(self, z):
        z = _as_vector(z)
        if z.size != self.dim_x + self.dim_y:
            raise ValueError(f"expected dim {self.dim_x + self.dim_y}, got {z.size}")
        return z[:self.dim_x], z[self.dim_x:]

    def eval_f(self, x, y) -> float:
        return float(self._eval_f(np.asarray(x, float), np.asarray(y, float)))

    def grad_x(self, x, y) -> np.ndarray:
        return np.asarray(self._grad_x(np.asarray(x, float), np.asarray(y, float)), float)

    def grad_y(self, x, y) -> np.ndarray:
        return np.asarray(self._grad_y(np.asarray(x, float), np.asarray(y, float)), float)

    def field(self, z) -> np.ndarray:
        return field_operator(self, z)


def field_operator(p: SaddleProblem, z) -> np.ndarray:
    """Monotone field F(z) = [grad_x f; -grad_y f] at z = (x, y)."""
    x, y = p.split(z)
    return np.concatenate([p.grad_x(x, y), -p.grad_y(x, y)])


class StructuredProblem(SaddleProblem):
    """Quadratic structured instance 0.5||C1 x - b1||^2 + <A x, y> - 0.5||C2 y - b2||^2.

    Smoothness constants come from spectral norms: L_xx = ||C1||^2,
    L_yy = ||C2||^2, L_xy = L_yx = ||A||.  Both h and g have strong-convexity
    modulus 1 in their own arguments.
    """

    kappa_x = 1.0
    kappa_y = 1.0
    h_kind = "quadratic_half_sq_residual"
    g_kind = "quadratic_half_sq_residual"

    def __init__(self, C1, b1, A, C2, b2, G=None, a=None, F=None, c=None,
                 offset: float = 0.0, meta: Optional[dict] = None):
        C1 = np.atleast_2d(np.asarray(C1, float))
        C2 = np.atleast_2d(np.asarray(C2, float))
        A = np.atleast_2d(np.asarray(A, float))
        b1 = _as_vector(b1)
        b2 = _as_vector(b2)
        n, m = C1.shape[1], C2.shape[1]
        if A.shape != (m, n):
            raise ValueError(f"coupling matrix must be {m}x{n}, got {A.shape}")
        if b1.size != C1.shape[0] or b2.size != C2.shape[0]:
            raise ValueError("residual centers do not match C1/C2 row counts")
        self.C1, self.b1, self.A, self.C2, self.b2 = C1, b1, A, C2, b2
        self.G = None if G is None else np.atleast_2d(np.asarray(G, float))
        self.a = None if a is None else _as_vector(a)
        self.F = None if F is None else np.atleast_2d(np.asarray(F, float))
        self.c = None if c is None else _as_vector(c)
        self.offset = float(offset)
        self.meta = dict(meta or {})

        set_x = (SimpleSet.whole_space() if self.G is None
                 else SimpleSet.halfspace_system(self.G, self.a))
        set_y = (SimpleSet.whole_space() if self.F is None
                 else SimpleSet.halfspace_system(self.F, self.c))
        normA = float(np.linalg.norm(A, 2)) if A.size else 0.0
        sm = SmoothnessConstants(
            L_xx=float(np.linalg.norm(C1, 2)) ** 2,
            L_xy=normA, L_yx=normA,
            L_yy=float(np.linalg.norm(C2, 2)) ** 2,
        )

        def eval_f(x, y):
            rx = C1 @ x - b1
            ry = C2 @ y - b2
            return 0.5 * np.dot(rx, rx) + np.dot(A @ x, y) - 0.5 * np.dot(ry, ry) + self.offset

        def grad_x(x, y):
            return C1.T @ (C1 @ x - b1) + A.T @ y

        def grad_y(x, y):
            return A @ x - C2.T @ (C2 @ y - b2)

        super().__init__(n, m, eval_f, grad_x, grad_y, set_x, set_y, sm,
                         name=self.meta.get("constructor", "structured"))

    @property
    def constrained(self) -> bool:
        return self.G is not None or self.F is not None


def make_random_quadratic(n: int, m: int, p: int, q: int, seed: int,
                          coupling_std: float = 5.0) -> StructuredProblem:
    """Random unconstrained structured instance with Gaussian data.

    C1, C2, b1, b2 have i.i.d. standard normal entries; A has mean zero and
    the given standard deviation.  p < n and q < m keep C1, C2 rank deficient
    so the objective is not strongly convex-strongly concave.
    """
    if not coupling_std > 0:
        raise ValueError("coupling_std must be positive")
    if p >= n or q >= m:
        warnings.warn("p >= n or q >= m makes the objective strongly "
                      "convex/concave in the corresponding block",
                      stacklevel=2)
    rng = _rng(seed)
    C1 = rng.standard_normal((p, n))
    C2 = rng.standard_normal((q, m))
    b1 = rng.standard_normal(p)
    b2 = rng.standard_normal(q)
    A = coupling_std * rng.standard_normal((m, n))
    meta = {"constructor": "random_quadratic", "dims": (n, m, p, q),
            "seed": int(seed), "coupling_std": float(coupling_std)}
    return StructuredProblem(C1, b1, A, C2, b2, meta=meta)


def make_fenchel(B1, B2, center1=None, center2=None,
                 f1_kind: str = "quadratic_half_sq_residual",
                 f2_kind: str = "quadratic_half_sq_residual") -> StructuredProblem:
    """Saddle reformulation of min_x f1(B1 x) + f2(B2 x) via the conjugate of f2.

    For f2(u) = 0.5 ||u - c2||^2 the conjugate is f2*(y) = 0.5 ||y||^2 + <c2, y>
    = 0.5 ||y + c2||^2 - 0.5 ||c2||^2, which stays in the quadratic family.
    """
    supported = "quadratic_half_sq_residual"
    if f1_kind != supported or f2_kind != supported:
        raise ValueError("unsupported conjugate: only the quadratic family "
                         "0.5||u - b||^2 has a closed-form conjugate here")
    B1 = np.atleast_2d(np.asarray(B1, float))
    B2 = np.atleast_2d(np.asarray(B2, float))
    c1 = np.zeros(B1.shape[0]) if center1 is None else _as_vector(center1)
    c2 = np.zeros(B2.shape[0]) if center2 is None else _as_vector(center2)
    q = B2.shape[0]
    meta = {"constructor": "fenchel"}
    # g(y) = 0.5||y + c2||^2 = f2*(y) + 0.5||c2||^2, so the offset restores -f2*
    return StructuredProblem(C1=B1, b1=c1, A=B2, C2=np.eye(q), b2=-c2,
                             offset=0.5 * float(np.dot(c2, c2)), meta=meta)


# ---------------------------------------------------------------------------
# solution sets
# ---------------------------------------------------------------------------

class SolutionSet:
    """Representation of the saddle solution set Z* with a projection oracle.

    Kinds: single_point, affine (anchor + orthonormal basis of directions,
    optionally intersected with J z <= l), sampled (finite list).
    """

    def __init__(self, kind, point=None, anchor=None, basis=None, ineq=None,
                 points=None, multipliers=None):
        self.kind = kind
        self.point = point
        self.anchor = anchor
        self.basis = basis
        self.ineq = ineq
        self.points = points
        self.multipliers = multipliers

    @classmethod
    def single_point(cls, z, multipliers=None) -> "SolutionSet":
        return cls("single_point", point=_as_vector(z), multipliers=multipliers)

    @classmethod
    def affine_set(cls, anchor, basis, ineq=None, multipliers=None) -> "SolutionSet":
        return cls("affine", anchor=_as_vector(anchor),
                   basis=np.asarray(basis, float), ineq=ineq,
                   multipliers=multipliers)

    @classmethod
    def sampled(cls, points, multipliers=None) -> "SolutionSet":
        pts = [_as_vector(p) for p in points]
        if not pts:
            raise ValueError("sampled solution set needs at least one point")
        return cls("sampled", points=pts, multipliers=multipliers)

    def project(self, z) -> np.ndarray:
        z = _as_vector(z)
        if self.kind == "single_point":
            return self.point.copy()
        if self.kind == "affine":
            t = self.basis.T @ (z - self.anchor)
            out = self.anchor + self.basis @ t
            if self.ineq is not None:
                J, l = self.ineq
                if np.max(J @ out - l, initial=-np.inf) > 1e-9:
                    GN = J @ self.basis
                    rhs = l - J @ self.anchor
                    t = project_polyhedron(t, G=GN, a=rhs)
                    out = self.anchor + self.basis @ t
            return out
        if self.kind == "sampled":
            dists = [np.linalg.norm(z - p) for p in self.points]
            return self.points[int(np.argmin(dists))].copy()
        raise ValueError(f"unknown solution-set kind {self.kind!r}")

    def distance_sq(self, z) -> float:
        d = _as_vector(z) - self.project(z)
        return float(np.dot(d, d))

    def members(self):
        """A few representative members for spot checks."""
        if self.kind == "single_point":
            return [self.point]
        if self.kind == "sampled":
            return list(self.points)
        return [self.anchor]


def _nullspace(M: np.ndarray, rank_tol: float = _RANK_TOL) -> np.ndarray:
    if M.size == 0:
        return np.eye(M.shape[1])
    u, s, vt = np.linalg.svd(M)
    cut = rank_tol * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > cut))
    return vt[rank:].T


def kkt_solution_set(p: StructuredProblem, tol: float = 1e-9,
                     budget: int = 1 << 20) -> SolutionSet:
    """Solution set of a structured instance from its KKT equations.

    Unconstrained instances reduce to the linear system
    [[C1'C1, A'], [-A, C2'C2]] z = [C1'b1; C2'b2] whose solution set is
    affine.  Constrained instances are solved by active-set enumeration over
    the rows of G and F (desk scale), keeping feasible, complementary
    solutions with nonnegative multipliers.
    """
    n, m = p.dim_x, p.dim_y
    H = np.block([[p.C1.T @ p.C1, p.A.T], [-p.A, p.C2.T @ p.C2]])
    rhs = np.concatenate([p.C1.T @ p.b1, p.C2.T @ p.b2])

    if not p.constrained:
        z = np.linalg.lstsq(H, rhs, rcond=None)[0]
        resid = float(np.linalg.norm(H @ z - rhs))
        if resid > tol * (1.0 + float(np.linalg.norm(rhs))):
            raise SolveError(f"KKT system inconsistent (residual {resid:.2e})")
        N = _nullspace(H)
        zero = (np.zeros(0), np.zeros(0))
        if N.shape[1] == 0:
            return SolutionSet.single_point(z, multipliers=zero)
        return SolutionSet.affine_set(z, N, multipliers=zero)

    G = p.G if p.G is not None else np.zeros((0, n))
    a = p.a if p.a is not None else np.zeros(0)
    F = p.F if p.F is not None else np.zeros((0, m))
    c = p.c if p.c is not None else np.zeros(0)
    r, s = G.shape[0], F.shape[0]
    if r + s > 20:
        raise SolveError("active-set enumeration supports at most 20 rows")
    if 2 ** (r + s) > budget:
        raise SolveError("active-set enumeration budget exceeded")

    found = []
    rows = [("x", i) for i in range(r)] + [("y", j) for j in range(s)]
    for size in range(len(rows) + 1):
        for S in combinations(range(len(rows)), size):
            Sg = [rows[i][1] for i in S if rows[i][0] == "x"]
            Sf = [rows[i][1] for i in S if rows[i][0] == "y"]
            kg, kf = len(Sg), len(Sf)
            dim = n + m + kg + kf
            M = np.zeros((dim, dim))
            v = np.zeros(dim)
            M[:n + m, :n + m] = H
            v[:n + m] = rhs
            # stationarity: grad_x f + G' lam = 0 and grad_y f - F' nu = 0,
            # with lam, nu >= 0 (the y-row of H stores -grad_y f)
            if kg:
                M[:n, n + m:n + m + kg] = G[Sg].T
                M[n + m:n + m + kg, :n] = G[Sg]
                v[n + m:n + m + kg] = a[Sg]
            if kf:
                M[n:n + m, n + m + kg:] = F[Sf].T
                M[n + m + kg:, n:n + m] = F[Sf]
                v[n + m + kg:] = c[Sf]
            sol = np.linalg.lstsq(M, v, rcond=None)[0]
            if np.linalg.norm(M @ sol - v) > tol * (1.0 + np.linalg.norm(v)):
                continue
            z = sol[:n + m]
            lam_s = sol[n + m:n + m + kg]
            nu_s = sol[n + m + kg:]
            if (kg and np.min(lam_s) < -tol) or (kf and np.min(nu_s) < -tol):
                continue
            if r and np.max(G @ z[:n] - a) > tol:
                continue
            if s and np.max(F @ z[n:] - c) > tol:
                continue
            lam = np.zeros(r)
            lam[Sg] = np.maximum(lam_s, 0.0)
            nu = np.zeros(s)
            nu[Sf] = np.maximum(nu_s, 0.0)
            found.append((z, lam, nu))

    if not found:
        raise SolveError("no KKT point found (infeasible or singular system)")
    distinct = []
    for z, lam, nu in found:
        if not any(np.linalg.norm(z - z2) <= 1e-8 * (1 + np.linalg.norm(z))
                   for z2, _, _ in distinct):
            distinct.append((z, lam, nu))
    if len(distinct) == 1:
        z, lam, nu = distinct[0]
        return SolutionSet.single_point(z, multipliers=(lam, nu))
    return SolutionSet.sampled([z for z, _, _ in distinct],
                               multipliers=distinct[0][1:])


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

def example1_fixture():
    """Box-constrained test problem with a unique boundary saddle point.

    f(x, y) = 0.5 (x1^2 + x2^2) + (x1 + x2) y1 - y1^2 + y2 on [0,1]^2 x [0,1]^2,
    saddle point x* = (0, 0), y* = (0, 1).  Satisfies the two-sided functional
    growth condition with moduli (1, 1) but not the gradient version.
    """
    box = SimpleSet.box(np.zeros(2), np.ones(2))

    def eval_f(x, y):
        return 0.5 * (x[0] ** 2 + x[1] ** 2) + (x[0] + x[1]) * y[0] - y[0] ** 2 + y[1]

    def grad_x(x, y):
        return np.array([x[0] + y[0], x[1] + y[0]])

    def grad_y(x, y):
        return np.array([x[0] + x[1] - 2.0 * y[0], 1.0])

    sm = SmoothnessConstants(L_xx=1.0, L_xy=np.sqrt(2.0),
                             L_yx=np.sqrt(2.0), L_yy=2.0)
    problem = SaddleProblem(2, 2, eval_f, grad_x, grad_y, box, box, sm,
                            name="example1")
    solset = SolutionSet.single_point(np.array([0.0, 0.0, 0.0, 1.0]))
    return problem, solset


@dataclass(frozen=True)
class ScalarGrowthFixture:
    """Scalar convex function whose gradient growth holds exactly under the
    x^2/2 + exp(x^2) geometry while functional growth decays to zero.

    h'(x) = x/2 + (exp(x^2) - 1)/x with h'(0) = 0; h is recovered by adaptive
    quadrature of h' (the closed form needs the exponential integral), offset
    so that h(0) equals half of Euler's constant.
    """

    domain_ub: float
    generator: object

    def _check(self, x: float):
        if not (0.0 <= x <= self.domain_ub):
            raise ValueError(f"x={x} outside [0, {self.domain_ub}]")

    def h_prime(self, x: float) -> float:
        self._check(x)
        if x == 0.0:
            return 0.0
        return 0.5 * x + float(np.expm1(x * x)) / x

    def h(self, x: float) -> float:
        self._check(x)
        val, _ = quad(self.h_prime, 0.0, x, limit=200)
        return 0.5 * np.euler_gamma + val

    def gap_from_min(self, x: float) -> float:
        """h(x) - h(0)."""
        return self.h(x) - 0.5 * np.euler_gamma

    def distance_to_min(self, x: float) -> float:
        """Bregman distance D(x, 0) = x^2/2 + exp(x^2) - 1 of the generator."""
        self._check(x)
        return 0.5 * x * x + float(np.expm1(x * x))


def example2_fixture(domain_ub: float = 3.0) -> ScalarGrowthFixture:
    from .geometry import BregmanGenerator
    if not (np.isfinite(domain_ub) and domain_ub > 0):
        raise ValueError("domain_ub must be positive and finite")
    gen = BregmanGenerator.exp_quadratic(0.0, float(domain_ub))
    return ScalarGrowthFixture(domain_ub=float(domain_ub), generator=gen)


def example2_as_saddle(domain_ub: float = 3.0):
    """Degenerate saddle problem (empty y block) wrapping the scalar fixture."""
    fix = example2_fixture(domain_ub)
    box = SimpleSet.box(np.zeros(1), np.full(1, domain_ub))
    empty = SimpleSet.whole_space()
    # h''(x) = 1/2 + 2 exp(x^2) - expm1(x^2)/x^2 is increasing, so its sup on
    # [0, ub] sits at the right endpoint
    u2 = domain_ub ** 2
    Lxx = float(0.5 + 2.0 * np.exp(u2) - np.expm1(u2) / u2)

    def eval_f(x, y):
        return fix.h(float(x[0]))

    def grad_x(x, y):
        return np.array([fix.h_prime(float(x[0]))])

    def grad_y(x, y):
        return np.zeros(0)

    sm = SmoothnessConstants(L_xx=Lxx, L_xy=0.0, L_yx=1.0, L_yy=0.0)
    problem = SaddleProblem(1, 0, eval_f, grad_x, grad_y, box, empty, sm,
                            name="example2")
    solset = SolutionSet.single_point(np.zeros(1))
    return problem, solset, fix


# ---------------------------------------------------------------------------
# serialization (JSON-shaped, matrices row-major, round-trip exact floats)
# ---------------------------------------------------------------------------

_SCHEMA = "sella/problem/v1"


def _mat_to_obj(M: Optional[np.ndarray]):
    if M is None:
        return None
    M = np.atleast_2d(M)
    return {"rows": M.shape[0], "cols": M.shape[1],
            "data": [float(v) for v in M.ravel(order="C")]}


def _obj_to_mat(obj):
    if obj is None:
        return None
    data = np.asarray(obj["data"], dtype=float)
    return data.reshape((obj["rows"], obj["cols"]), order="C")


def problem_to_dict(p) -> dict:
    if isinstance(p, StructuredProblem):
        d = {
            "schema": _SCHEMA,
            "kind": "structured_quadratic",
            "dims": {"n": p.dim_x, "m": p.dim_y,
                     "p": p.C1.shape[0], "q": p.C2.shape[0]},
            "C1": _mat_to_obj(p.C1), "b1": [float(v) for v in p.b1],
            "A": _mat_to_obj(p.A),
            "C2": _mat_to_obj(p.C2), "b2": [float(v) for v in p.b2],
            "offset": p.offset,
            "meta": {k: (list(v) if isinstance(v, tuple) else v)
                     for k, v in p.meta.items()},
        }
        if p.G is not None:
            d["G"] = _mat_to_obj(p.G)
            d["a"] = [float(v) for v in p.a]
        if p.F is not None:
            d["F"] = _mat_to_obj(p.F)
            d["c"] = [float(v) for v in p.c]
        return d
    if getattr(p, "name", "") == "example1":
        return {"schema": _SCHEMA, "kind": "example1"}
    raise ConfigError(f"cannot serialize problem of type {type(p).__name__}")


def problem_from_dict(d: dict):
    """Rebuild a problem from its dict form.

    Returns (problem, moduli_dict_or_None).  Constructor-form entries
    ("random_quadratic") are regenerated from the stored seed, which is
    bit-exact under the fixed PRNG.
    """
    if not isinstance(d, dict):
        raise ConfigError("problem file must contain a JSON object")
    kind = d.get("kind")
    moduli = d.get("moduli")
    if kind == "example1":
        problem, _ = example1_fixture()
        return problem, moduli
    if kind == "random_quadratic":
        dims = d.get("dims")
        if not (isinstance(dims, (list, tuple)) and len(dims) == 4):
            raise ConfigError("random_quadratic needs dims [n, m, p, q]")
        return make_random_quadratic(*[int(v) for v in dims],
                                     seed=int(d.get("seed", 0)),
                                     coupling_std=float(d.get("coupling_std", 5.0))), moduli
    if kind == "structured_quadratic":
        try:
            p = StructuredProblem(
                C1=_obj_to_mat(d["C1"]), b1=np.asarray(d["b1"], float),
                A=_obj_to_mat(d["A"]),
                C2=_obj_to_mat(d["C2"]), b2=np.asarray(d["b2"], float),
                G=_obj_to_mat(d.get("G")),
                a=None if "a" not in d else np.asarray(d["a"], float),
                F=_obj_to_mat(d.get("F")),
                c=None if "c" not in d else np.asarray(d["c"], float),
                offset=float(d.get("offset", 0.0)),
                meta=d.get("meta"),
            )
        except KeyError as e:
            raise ConfigError(f"structured_quadratic problem missing field {e}")
        return p, moduli
    raise ConfigError(f"unknown problem kind {kind!r}")


def save_problem(p, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_dict(p), fh, indent=1)
        fh.write("\n")


def load_problem(path):
    with open(path, "r", encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh))
