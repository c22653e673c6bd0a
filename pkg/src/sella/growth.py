"""Hoffman constants, growth moduli for the structured class, and sampled
certification of the two-sided growth conditions.

Certification is sampled, not exhaustive: the conditions quantify over all
feasible points, and we evaluate them on uniform draws from a bounding box
intersected with the feasible sets plus adversarial points near the solution
set and near set boundaries.  A pass therefore means "no violation found".
"""

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import GrowthError, NumericalError
from .geometry import BregmanGenerator, distance, project, project_polyhedron
from .problems import SaddleProblem, SolutionSet, StructuredProblem, field_operator

_RANK_TOL = 1e-12


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


# ---------------------------------------------------------------------------
# Hoffman constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HoffmanResult:
    """Hoffman constant of the polyhedron {A x = b, C x <= d} (any b, d)."""

    theta: float
    method: str  # sigma_min | klatte_enumeration | sampled_lower_bound
    witness: Optional[tuple] = None       # (u, v) achieving the sup, if known
    pattern: Optional[tuple] = None       # row indices of the maximizing pattern
    sampled_lower: Optional[float] = None


def _smallest_positive_sv(M: np.ndarray) -> float:
    sv = np.linalg.svd(M, compute_uv=False)
    keep = sv[sv > _RANK_TOL * (sv[0] if sv.size else 1.0)]
    if keep.size == 0:
        raise NumericalError("matrix has zero singular values only")
    return float(keep[-1])


def _klatte_enumerate(A: np.ndarray, C: np.ndarray):
    """Max of 1/sigma_min over admissible support patterns.

    Patterns select rows of C for the support of v; the equality block enters
    whole.  When the rows of A are not linearly independent, subsets of A's
    rows are enumerated as well, which yields a valid upper bound on the
    constant for consistent systems.
    """
    p, n = A.shape if A.size else (0, C.shape[1])
    full_rank_A = p == 0 or np.linalg.matrix_rank(A, tol=None) == p
    a_subsets = [tuple(range(p))] if full_rank_A else [
        S for k in range(min(p, n) + 1) for S in combinations(range(p), k)
    ]
    mrows = C.shape[0] if C is not None and C.size else 0
    best = 0.0
    best_pattern = None
    best_witness = None
    for I in a_subsets:
        base = A[list(I)] if I else np.zeros((0, n))
        for k in range(mrows + 1):
            for J in combinations(range(mrows), k):
                M = np.vstack([base, C[list(J)]]) if J else base
                if M.shape[0] == 0 or M.shape[0] > n:
                    continue
                u, sv, _ = np.linalg.svd(M)
                if sv[-1] <= _RANK_TOL * sv[0]:
                    continue  # rows dependent: pattern inadmissible
                val = 1.0 / float(sv[-1])
                if val > best:
                    best = val
                    best_pattern = (I, J)
                    w = u[:, -1] / sv[-1]
                    uu = np.zeros(p)
                    vv = np.zeros(mrows)
                    uu[list(I)] = w[:len(I)]
                    if J:
                        vv[list(J)] = w[len(I):]
                    best_witness = (uu, vv)
    if best_pattern is None:
        raise NumericalError("no admissible support pattern (zero system)")
    return best, best_pattern, best_witness


def _sampled_lower_bound(A, C, samples, seed):
    """Best observed ratio dist(x, P) / ||(Ax - b, [Cx - d]_+)|| over random
    polyhedron instances and query points."""
    rng = _rng(seed)
    n = A.shape[1] if A.size else C.shape[1]
    mrows = C.shape[0] if C is not None and C.size else 0
    best = 0.0
    n_instances = 8 if mrows else 2
    per = max(1, samples // n_instances)
    for inst in range(n_instances):
        x0 = rng.standard_normal(n)
        b = A @ x0 if A.size else np.zeros(0)
        if mrows:
            # alternate between active and slack inequality geometries
            slack = np.zeros(mrows) if inst % 2 == 0 else np.abs(rng.standard_normal(mrows))
            d = C @ x0 + slack
        else:
            d = np.zeros(0)
        for _ in range(per):
            w = rng.standard_normal(n)
            nw = np.linalg.norm(w)
            if nw == 0:
                continue
            x = x0 + w / nw * rng.uniform(0.05, 2.0)
            viol = np.concatenate([
                A @ x - b if A.size else np.zeros(0),
                np.maximum(C @ x - d, 0.0) if mrows else np.zeros(0),
            ])
            nv = float(np.linalg.norm(viol))
            if nv <= 1e-13:
                continue
            px = project_polyhedron(
                x,
                G=C if mrows else None, a=d if mrows else None,
                Aeq=A if A.size else None, beq=b if A.size else None)
            best = max(best, float(np.linalg.norm(x - px)) / nv)
    return best


def hoffman_constant(A, C=None, method: str = "auto",
                     lower_bound_samples: int = 0, seed: int = 0) -> HoffmanResult:
    """Hoffman constant of {x : A x = b, C x <= d} in the (l2, l2) norm pair.

    With no inequality block the constant is the reciprocal of the smallest
    nonzero singular value of A, which is exact for every consistent right-hand
    side.  With inequalities, admissible support patterns are enumerated and
    the largest reciprocal smallest singular value over patterns is returned.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float)) if A is not None else np.zeros((0, 0))
    if C is not None:
        C = np.atleast_2d(np.asarray(C, dtype=float))
        if C.size == 0:
            C = None
    if A.size == 0 and C is None:
        raise ValueError("empty system")
    if C is not None and A.size and C.shape[1] != A.shape[1]:
        raise ValueError("A and C must have the same number of columns")

    if method == "auto":
        method = "sigma_min" if C is None else "klatte_enumeration"

    if method == "sigma_min":
        if C is not None:
            raise ValueError("sigma_min method applies to equality-only systems")
        theta = 1.0 / _smallest_positive_sv(A)
        result = HoffmanResult(theta=theta, method="sigma_min")
    elif method == "klatte_enumeration":
        total = A.shape[0] + (C.shape[0] if C is not None else 0)
        if total > 20:
            raise ValueError("klatte enumeration supports at most 20 rows")
        Cmat = C if C is not None else np.zeros((0, A.shape[1]))
        theta, pattern, witness = _klatte_enumerate(A, Cmat)
        result = HoffmanResult(theta=theta, method="klatte_enumeration",
                               pattern=pattern, witness=witness)
    else:
        raise ValueError(f"unknown method {method!r}")

    if lower_bound_samples > 0:
        lb = _sampled_lower_bound(A, C, lower_bound_samples, seed)
        result = HoffmanResult(theta=result.theta, method=result.method,
                               pattern=result.pattern, witness=result.witness,
                               sampled_lower=lb)
    return result


# ---------------------------------------------------------------------------
# curvature-dominance constants and growth moduli
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class XiConstants:
    """Semidefinite dominance factors for the structured class.

    xi1 bounds A'A by xi1 C1'C1, xi3 bounds AA' by xi3 C2'C2; xi2/xi4 carry
    the multiplier-weighted constraint blocks and are None for unconstrained
    instances.  The pseudoinverse formulas are exact when the kernel
    inclusions hold; `kernel_ok` records whether they do, with the worst
    violating directions in `violations`.
    """

    xi1: float
    xi3: float
    xi2: Optional[float] = None
    xi4: Optional[float] = None
    kernel_ok: bool = True
    violations: dict = field(default_factory=dict, compare=False)

    @property
    def nu1(self) -> float:
        return self.xi1

    @property
    def nu2(self) -> float:
        return self.xi3


def _nullspace(M: np.ndarray) -> np.ndarray:
    u, s, vt = np.linalg.svd(M)
    cut = 1e-10 * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > cut))
    return vt[rank:].T


def _kernel_violation(M: np.ndarray, N: np.ndarray):
    """Largest |M v| over unit kernel directions v (columns of N), relative."""
    if N.shape[1] == 0:
        return 0.0, None
    P = M @ N
    u, s, vt = np.linalg.svd(P)
    scale = max(float(np.linalg.norm(M, 2)), 1e-30)
    direction = N @ vt[0]
    return float(s[0]) / scale, direction


def xi_constants(p: StructuredProblem, multipliers=None, strict: bool = False,
                 tol: float = 1e-8) -> XiConstants:
    """Dominance constants via pseudoinverses: xi1 = ||A C1^+||^2 etc.

    The formulas certify xi1 C1'C1 >= A'A only under the kernel inclusions
    ker C1 <= ker A, ker C2 <= ker A', ker C1 <= ker G, ker C2 <= ker F.
    Random Gaussian instances violate them; by default the violation is
    recorded on the result (sampled certification downstream remains the
    ground truth), while strict=True raises with the violating direction.
    """
    N1 = _nullspace(p.C1)
    N2 = _nullspace(p.C2)
    checks = {
        "ker(C1)<=ker(A)": _kernel_violation(p.A, N1),
        "ker(C2)<=ker(A^T)": _kernel_violation(p.A.T, N2),
    }
    if p.G is not None:
        checks["ker(C1)<=ker(G)"] = _kernel_violation(p.G, N1)
    if p.F is not None:
        checks["ker(C2)<=ker(F)"] = _kernel_violation(p.F, N2)
    violations = {k: v for k, v in checks.items() if v[0] > tol}
    ok = not violations
    if strict and not ok:
        worst = max(violations.items(), key=lambda kv: kv[1][0])
        raise GrowthError(
            f"kernel inclusion {worst[0]} violated (relative magnitude "
            f"{worst[1][0]:.3e}); the structured-class assumption does not "
            f"hold for this instance")

    pinv1 = np.linalg.pinv(p.C1)
    pinv2 = np.linalg.pinv(p.C2)
    xi1 = float(np.linalg.norm(p.A @ pinv1, 2)) ** 2
    xi3 = float(np.linalg.norm(p.A.T @ pinv2, 2)) ** 2
    xi2 = xi4 = None
    if p.constrained:
        if multipliers is None:
            raise ValueError("constrained instances need (lambda*, nu*) multipliers")
        lam, nu = multipliers
        xi2 = float(np.dot(lam, lam)) * float(np.linalg.norm(p.G @ pinv1, 2)) ** 2 \
            if p.G is not None else 0.0
        xi4 = float(np.dot(nu, nu)) * float(np.linalg.norm(p.F @ pinv2, 2)) ** 2 \
            if p.F is not None else 0.0
    return XiConstants(xi1=xi1, xi3=xi3, xi2=xi2, xi4=xi4, kernel_ok=ok,
                       violations=violations)


@dataclass(frozen=True)
class GrowthModuli:
    """Growth moduli (mu_x, mu_y) with the condition they certify.

    condition is "two_sided_qfg", "two_sided_qgg", or "both".  The momentum
    weight rule is varsigma = theta under functional growth and
    varsigma = 2 (1 - theta) under gradient growth; see `varsigma_for`.
    """

    mu_x: float
    mu_y: float
    condition: str = "both"

    def __post_init__(self):
        if not (self.mu_x > 0 and self.mu_y > 0):
            raise ValueError("growth moduli must be positive")
        if self.condition not in ("two_sided_qfg", "two_sided_qgg", "both"):
            raise ValueError(f"unknown condition {self.condition!r}")

    def scaled(self, sx: float, sy: float, condition=None) -> "GrowthModuli":
        return GrowthModuli(self.mu_x * sx, self.mu_y * sy,
                            condition or self.condition)


def varsigma_for(condition: str, theta: float, available: str = "both"):
    """Momentum weight varsigma for a requested growth condition.

    Returns (varsigma, effective_condition).  condition="auto" picks the
    larger valid weight among the conditions the moduli certify; an explicit
    condition whose weight degenerates to zero (qfg at theta=0, qgg at
    theta=1) is an error.
    """
    rules = {"qfg": ("two_sided_qfg", theta),
             "qgg": ("two_sided_qgg", 2.0 * (1.0 - theta))}
    alias = {"two_sided_qfg": "qfg", "two_sided_qgg": "qgg", "both": "auto"}
    condition = alias.get(condition, condition)
    if condition == "auto":
        cands = [rules[c] for c in ("qfg", "qgg")
                 if available in ("both", rules[c][0])]
        cands = [c for c in cands if c[1] > 0]
        if not cands:
            raise GrowthError(f"no valid momentum weight at theta={theta}")
        name, value = max(cands, key=lambda c: c[1])
        return value, name
    if condition not in rules:
        raise ValueError(f"unknown growth condition {condition!r}")
    name, value = rules[condition]
    if available not in ("both", name):
        raise GrowthError(f"moduli certify {available}, not {name}")
    if value <= 0:
        raise GrowthError(
            f"varsigma = 0 for condition {condition} at theta = {theta}; the "
            f"schedule requires qgg at theta=0 and qfg at theta=1")
    return value, name


def solution_system(p: StructuredProblem, multipliers=None):
    """Stacked (D, J) system whose polyhedron is the solution set Z*."""
    n, m = p.dim_x, p.dim_y
    blocks = [
        np.hstack([p.C1, np.zeros((p.C1.shape[0], m))]),
        np.hstack([p.A, np.zeros((p.A.shape[0], m))]),
        np.hstack([np.zeros((p.C2.shape[0], n)), p.C2]),
        np.hstack([np.zeros((p.A.shape[1], n)), p.A.T]),
    ]
    J = None
    if p.constrained:
        lam, nu = multipliers if multipliers is not None else (None, None)
        if p.G is not None:
            if lam is None:
                raise ValueError("constrained system needs lambda* multipliers")
            blocks.insert(2, np.hstack([np.diag(lam) @ p.G,
                                        np.zeros((p.G.shape[0], m))]))
        if p.F is not None:
            if nu is None:
                raise ValueError("constrained system needs nu* multipliers")
            blocks.append(np.hstack([np.zeros((p.F.shape[0], n)),
                                     np.diag(nu) @ p.F]))
        Jg = np.hstack([p.G, np.zeros((p.G.shape[0], m))]) if p.G is not None else np.zeros((0, n + m))
        Jf = np.hstack([np.zeros((p.F.shape[0], n)), p.F]) if p.F is not None else np.zeros((0, n + m))
        J = np.vstack([Jg, Jf])
        if J.shape[0] == 0:
            J = None
    return np.vstack(blocks), J


def structured_moduli(p: StructuredProblem, hoffman: HoffmanResult,
                      xi: XiConstants) -> GrowthModuli:
    """Equal growth moduli for the structured class.

    mu = min(kappa_x, kappa_y) / (theta^2 * max(1 + xi1 + xi2, 1 + xi3 + xi4)),
    certifying both two-sided conditions.
    """
    xi2 = xi.xi2 or 0.0
    xi4 = xi.xi4 or 0.0
    denom = hoffman.theta ** 2 * max(1.0 + xi.xi1 + xi2, 1.0 + xi.xi3 + xi4)
    mu = min(p.kappa_x, p.kappa_y) / denom
    if not (np.isfinite(mu) and mu > 0):
        raise NumericalError(f"nonpositive growth modulus {mu}; an upstream "
                             f"constant is invalid")
    return GrowthModuli(mu_x=mu, mu_y=mu, condition="both")


def compute_growth_moduli(p: StructuredProblem, solset: Optional[SolutionSet] = None,
                          strict: bool = False):
    """Full pipeline: solution system -> Hoffman constant -> xi -> moduli."""
    multipliers = solset.multipliers if solset is not None else None
    D, J = solution_system(p, multipliers)
    if J is None:
        hof = hoffman_constant(D, method="sigma_min")
    else:
        hof = hoffman_constant(D, J, method="klatte_enumeration")
    xi = xi_constants(p, multipliers, strict=strict)
    return structured_moduli(p, hof, xi), hof, xi


# ---------------------------------------------------------------------------
# sampled certification
# ---------------------------------------------------------------------------

@dataclass
class CertReport:
    """Outcome of a sampled growth-condition check."""

    condition: str
    mu_x: float
    mu_y: float
    samples: int
    min_margin: float
    worst_point: np.ndarray
    passed: bool
    tol: float
    n_violations: int

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "mu_x": self.mu_x, "mu_y": self.mu_y,
            "samples": self.samples,
            "min_margin": self.min_margin,
            "worst_point": [float(v) for v in self.worst_point],
            "passed": self.passed,
            "tol": self.tol,
            "n_violations": self.n_violations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _sample_feasible(p: SaddleProblem, zstar: SolutionSet, samples: int,
                     rng: np.random.Generator, halfwidth=None):
    """Uniform box samples intersected with the sets, plus points near Z*
    and near set boundaries."""
    euclid = BregmanGenerator.euclidean()
    center = zstar.project(np.zeros(p.dim_x + p.dim_y))

    def bounds(set_, c):
        if set_.kind == "box":
            return set_.lower, set_.upper
        hw = halfwidth if halfwidth is not None else max(
            1.0, 2.0 * (1.0 + float(np.max(np.abs(c), initial=0.0))))
        return c - hw, c + hw

    lo_x, hi_x = bounds(p.set_x, center[:p.dim_x])
    lo_y, hi_y = bounds(p.set_y, center[p.dim_x:])
    lo = np.concatenate([lo_x, lo_y])
    hi = np.concatenate([hi_x, hi_y])

    def feasible(z):
        x, y = z[:p.dim_x], z[p.dim_x:]
        if not p.set_x.contains(x):
            x = project(euclid, p.set_x, x)
        if p.dim_y and not p.set_y.contains(y):
            y = project(euclid, p.set_y, y)
        return np.concatenate([x, y])

    n_near = samples // 5
    n_bnd = samples // 5 if p.set_x.kind == "box" or p.set_y.kind == "box" else 0
    n_uni = samples - n_near - n_bnd
    out = []
    for _ in range(n_uni):
        out.append(feasible(rng.uniform(lo, hi)))
    scales = [1e-3, 1e-2, 1e-1]
    for i in range(n_near):
        d = rng.standard_normal(lo.size)
        nd = np.linalg.norm(d)
        if nd == 0:
            d[0] = 1.0
            nd = 1.0
        eps = scales[i % len(scales)] * float(np.max(hi - lo, initial=1.0))
        out.append(feasible(center + eps * d / nd))
    for _ in range(n_bnd):
        z = rng.uniform(lo, hi)
        mask = rng.uniform(size=z.size) < 0.5
        z[mask] = np.where(rng.uniform(size=z.size) < 0.5, lo, hi)[mask]
        out.append(feasible(z))
    return out


def _certify(p, zstar, moduli, samples, seed, margin_fn, condition,
             geom_x, geom_y, tol, extra_points):
    if samples < 1 and not extra_points:
        raise ValueError("samples must be >= 1")
    geom_x = geom_x or BregmanGenerator.euclidean()
    geom_y = geom_y or BregmanGenerator.euclidean()
    rng = _rng(seed)
    points = _sample_feasible(p, zstar, samples, rng) if samples >= 1 else []
    for z in (extra_points or []):
        z = np.asarray(z, float)
        x, y = p.split(z)
        if not (p.set_x.contains(x) and (p.dim_y == 0 or p.set_y.contains(y))):
            raise ValueError("forced sample point is infeasible")
        points.append(z)

    min_margin = np.inf
    worst = points[0]
    n_viol = 0
    for z in points:
        zbar = zstar.project(z)
        m = margin_fn(z, zbar, geom_x, geom_y)
        if m < min_margin:
            min_margin = m
            worst = z
        if m < -tol:
            n_viol += 1
    return CertReport(condition=condition, mu_x=moduli.mu_x, mu_y=moduli.mu_y,
                      samples=len(points), min_margin=float(min_margin),
                      worst_point=worst, passed=min_margin >= -tol, tol=tol,
                      n_violations=n_viol)


def certify_qgg(p: SaddleProblem, zstar: SolutionSet, moduli: GrowthModuli,
                samples: int = 500, seed: int = 0, geom_x=None, geom_y=None,
                tol: float = 1e-8, extra_points=None) -> CertReport:
    """Sampled check of <F(z) - F(zbar), z - zbar> >= 2 D^M(z, zbar)."""

    def margin(z, zbar, gx, gy):
        lhs = float(np.dot(field_operator(p, z) - field_operator(p, zbar), z - zbar))
        x, y = p.split(z)
        xb, yb = p.split(zbar)
        rhs = 2.0 * (moduli.mu_x * distance(gx, x, xb)
                     + (moduli.mu_y * distance(gy, y, yb) if p.dim_y else 0.0))
        return lhs - rhs

    return _certify(p, zstar, moduli, samples, seed, margin, "two_sided_qgg",
                    geom_x, geom_y, tol, extra_points)


def certify_qfg(p: SaddleProblem, zstar: SolutionSet, moduli: GrowthModuli,
                samples: int = 500, seed: int = 0, geom_x=None, geom_y=None,
                tol: float = 1e-8, extra_points=None) -> CertReport:
    """Sampled check of f(x, ybar) - f(xbar, y) >= D^M(z, zbar)."""

    def margin(z, zbar, gx, gy):
        x, y = p.split(z)
        xb, yb = p.split(zbar)
        lhs = p.eval_f(x, yb) - p.eval_f(xb, y)
        rhs = (moduli.mu_x * distance(gx, x, xb)
               + (moduli.mu_y * distance(gy, y, yb) if p.dim_y else 0.0))
        return lhs - rhs

    return _certify(p, zstar, moduli, samples, seed, margin, "two_sided_qfg",
                    geom_x, geom_y, tol, extra_points)


def qgg_implies_qfg_check(p: SaddleProblem, zstar: SolutionSet,
                          qgg_moduli: GrowthModuli, L_psi_x: float,
                          L_psi_y: float, samples: int = 500, seed: int = 0,
                          geom_x=None, geom_y=None, tol: float = 1e-8,
                          extra_points=None) -> CertReport:
    """Check functional growth at moduli (mu_x / L_psi_x, mu_y / L_psi_y).

    Under gradient growth and gradient-Lipschitz generators the functional
    condition holds with the scaled moduli, so this is expected to certify.
    """
    if not (np.isfinite(L_psi_x) and np.isfinite(L_psi_y)):
        raise ValueError("generator gradient-Lipschitz constants must be finite")
    scaled = qgg_moduli.scaled(1.0 / L_psi_x, 1.0 / L_psi_y,
                               condition="two_sided_qfg")
    return certify_qfg(p, zstar, scaled, samples, seed, geom_x, geom_y, tol,
                       extra_points)
