"""Bregman geometries: distance generators, simple sets, prox steps, projections.

All generators are 1-strongly convex by construction, so every Bregman
distance dominates half the squared Euclidean distance.  Norms are Euclidean
throughout; the dual norm is Euclidean as well.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import ProxError

DEFAULT_TOL_PROX = 1e-10
DEFAULT_TOL_FEAS = 1e-9
_ACTIVE_SET_BUDGET = 1 << 18


def _as_vector(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {z.shape}")
    return z


# ---------------------------------------------------------------------------
# distance-generating functions
# ---------------------------------------------------------------------------

def _exp_quad_value(z):
    return 0.5 * np.dot(z, z) + float(np.sum(np.exp(z * z)))


def _exp_quad_grad(z):
    return z + 2.0 * z * np.exp(z * z)


def _exp_quad_curvature(x):
    # second derivative of x^2/2 + exp(x^2); even and increasing in |x|
    return 1.0 + (2.0 + 4.0 * x * x) * np.exp(x * x)


@dataclass(frozen=True)
class BregmanGenerator:
    """A differentiable, 1-strongly convex distance-generating function.

    kind is one of "euclidean", "diag_quadratic", "exp_quadratic", "custom".
    grad_lipschitz is the Lipschitz constant of the gradient on the declared
    domain (np.inf when unknown).  exp_quadratic requires an explicit bounded
    interval because its gradient is not globally Lipschitz.
    """

    kind: str
    grad_lipschitz: float = 1.0
    strong_convexity: float = 1.0
    weights: Optional[np.ndarray] = None
    lo: float = -np.inf
    hi: float = np.inf
    value_fn: Optional[Callable] = field(default=None, compare=False)
    grad_fn: Optional[Callable] = field(default=None, compare=False)

    @classmethod
    def euclidean(cls) -> "BregmanGenerator":
        return cls(kind="euclidean", grad_lipschitz=1.0)

    @classmethod
    def diag_quadratic(cls, weights) -> "BregmanGenerator":
        w = _as_vector(weights)
        if np.any(w < 1.0):
            raise ValueError("diag_quadratic weights must be >= 1 to keep the "
                             "generator 1-strongly convex")
        return cls(kind="diag_quadratic", weights=w,
                   grad_lipschitz=float(np.max(w)))

    @classmethod
    def exp_quadratic(cls, lo: float, hi: float) -> "BregmanGenerator":
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError("exp_quadratic needs a bounded interval lo < hi")
        L = float(max(_exp_quad_curvature(abs(lo)), _exp_quad_curvature(abs(hi))))
        return cls(kind="exp_quadratic", lo=float(lo), hi=float(hi),
                   grad_lipschitz=L)

    @classmethod
    def custom(cls, value, grad, grad_lipschitz=np.inf,
               lo=-np.inf, hi=np.inf) -> "BregmanGenerator":
        return cls(kind="custom", value_fn=value, grad_fn=grad,
                   grad_lipschitz=float(grad_lipschitz),
                   lo=float(lo), hi=float(hi))

    # -- evaluation ---------------------------------------------------------

    def check_domain(self, z: np.ndarray, tol: float = DEFAULT_TOL_FEAS):
        if self.lo > -np.inf or self.hi < np.inf:
            if np.any(z < self.lo - tol) or np.any(z > self.hi + tol):
                raise ValueError(
                    f"point outside generator domain [{self.lo}, {self.hi}]")

    def value(self, z) -> float:
        z = _as_vector(z)
        self.check_domain(z)
        if self.kind == "euclidean":
            return 0.5 * float(np.dot(z, z))
        if self.kind == "diag_quadratic":
            if z.shape != self.weights.shape:
                raise ValueError("dimension mismatch with generator weights")
            return 0.5 * float(np.dot(self.weights * z, z))
        if self.kind == "exp_quadratic":
            return _exp_quad_value(z)
        return float(self.value_fn(z))

    def grad(self, z) -> np.ndarray:
        z = _as_vector(z)
        self.check_domain(z)
        if self.kind == "euclidean":
            return z.copy()
        if self.kind == "diag_quadratic":
            if z.shape != self.weights.shape:
                raise ValueError("dimension mismatch with generator weights")
            return self.weights * z
        if self.kind == "exp_quadratic":
            return _exp_quad_grad(z)
        return np.asarray(self.grad_fn(z), dtype=float)


def distance(gen: BregmanGenerator, z, anchor) -> float:
    """Bregman distance D(z, anchor) = phi(z) - phi(anchor) - <grad phi(anchor), z - anchor>."""
    z = _as_vector(z)
    anchor = _as_vector(anchor)
    if z.shape != anchor.shape:
        raise ValueError(f"dimension mismatch: {z.shape} vs {anchor.shape}")
    gen.check_domain(z)
    gen.check_domain(anchor)
    d = z - anchor
    if gen.kind == "euclidean":
        return 0.5 * float(np.dot(d, d))
    if gen.kind == "diag_quadratic":
        return 0.5 * float(np.dot(gen.weights * d, d))
    if gen.kind == "exp_quadratic":
        # stable per-coordinate form: 0.5 d^2 + e^{a^2} (expm1(d (z+a)) - 2 a d)
        a = anchor
        extra = np.exp(a * a) * (np.expm1(d * (z + a)) - 2.0 * a * d)
        return float(np.sum(0.5 * d * d + extra))
    val = gen.value(z) - gen.value(anchor) - float(np.dot(gen.grad(anchor), d))
    return val


# ---------------------------------------------------------------------------
# simple convex sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimpleSet:
    """A simple closed convex set with a cheap membership test."""

    kind: str
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    G: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None
    Aeq: Optional[np.ndarray] = None
    beq: Optional[np.ndarray] = None
    radius: float = 0.0

    @classmethod
    def whole_space(cls) -> "SimpleSet":
        return cls(kind="whole_space")

    @classmethod
    def box(cls, lower, upper) -> "SimpleSet":
        lo = _as_vector(lower)
        hi = _as_vector(upper)
        if lo.shape != hi.shape:
            raise ValueError("box bounds must have equal length")
        if np.any(lo > hi):
            raise ValueError("empty box: lower > upper")
        return cls(kind="box", lower=lo, upper=hi)

    @classmethod
    def halfspace_system(cls, G, a) -> "SimpleSet":
        G = np.atleast_2d(np.asarray(G, dtype=float))
        a = _as_vector(a)
        if G.shape[0] != a.shape[0]:
            raise ValueError("halfspace system shape mismatch")
        return cls(kind="halfspace_system", G=G, a=a)

    @classmethod
    def affine(cls, Aeq, beq) -> "SimpleSet":
        Aeq = np.atleast_2d(np.asarray(Aeq, dtype=float))
        beq = _as_vector(beq)
        if Aeq.shape[0] != beq.shape[0]:
            raise ValueError("affine system shape mismatch")
        resid = np.linalg.lstsq(Aeq, beq, rcond=None)[1]
        if resid.size and resid[0] > 1e-10 * (1.0 + float(np.dot(beq, beq))):
            raise ValueError("empty affine set: system inconsistent")
        return cls(kind="affine", Aeq=Aeq, beq=beq)

    @classmethod
    def simplex(cls, radius: float) -> "SimpleSet":
        if radius <= 0:
            raise ValueError("simplex radius must be positive")
        return cls(kind="simplex", radius=float(radius))

    def contains(self, z, tol: float = DEFAULT_TOL_FEAS) -> bool:
        z = _as_vector(z)
        if self.kind == "whole_space":
            return True
        if self.kind == "box":
            return bool(np.all(z >= self.lower - tol) and np.all(z <= self.upper + tol))
        if self.kind == "halfspace_system":
            return bool(np.max(self.G @ z - self.a, initial=-np.inf) <= tol)
        if self.kind == "affine":
            r = self.Aeq @ z - self.beq
            return bool(np.max(np.abs(r), initial=0.0) <= tol)
        if self.kind == "simplex":
            return bool(np.all(z >= -tol) and abs(float(np.sum(z)) - self.radius) <= tol)
        raise ValueError(f"unknown set kind {self.kind!r}")


# ---------------------------------------------------------------------------
# projections onto polyhedra (weighted Euclidean metric, desk scale)
# ---------------------------------------------------------------------------

def project_polyhedron(u, G=None, a=None, Aeq=None, beq=None, weights=None,
                       tol: float = 1e-9, budget: int = _ACTIVE_SET_BUDGET) -> np.ndarray:
    """Minimize 0.5 (x-u)' W (x-u) subject to G x <= a and Aeq x = beq.

    Exact active-set enumeration; intended for desk-scale systems.  Any KKT
    point of this convex QP is the global minimizer, so the first active set
    passing the primal/dual checks is returned.
    """
    u = _as_vector(u)
    w = np.ones_like(u) if weights is None else _as_vector(weights)
    rows_g = 0 if G is None else G.shape[0]
    if 2 ** rows_g > budget:
        raise ProxError(f"active-set enumeration budget exceeded ({rows_g} rows)")
    winv = 1.0 / w

    def kkt_try(S):
        blocks = []
        rhs = []
        if Aeq is not None:
            blocks.append(Aeq)
            rhs.append(beq)
        if S:
            blocks.append(G[list(S)])
            rhs.append(a[list(S)])
        if not blocks:
            x = u.copy()
            lam = np.zeros(0)
        else:
            M = np.vstack(blocks)
            r = np.concatenate(rhs)
            K = M @ (winv[:, None] * M.T)
            lam = np.linalg.lstsq(K, M @ u - r, rcond=None)[0]
            x = u - winv * (M.T @ lam)
            if np.linalg.norm(M @ x - r) > tol * (1.0 + np.linalg.norm(r)):
                return None
        neq = 0 if Aeq is None else Aeq.shape[0]
        if S and np.min(lam[neq:]) < -tol:
            return None
        if rows_g and np.max(G @ x - a) > tol:
            return None
        return x

    for size in range(rows_g + 1):
        for S in combinations(range(rows_g), size):
            x = kkt_try(S)
            if x is not None:
                return x
    raise ProxError("active-set enumeration found no KKT point "
                    "(infeasible or degenerate polyhedron)")


def _project_simplex_sorted(u: np.ndarray, radius: float) -> np.ndarray:
    # classical O(d log d) Euclidean projection onto {x >= 0, sum x = radius}
    s = np.sort(u)[::-1]
    css = np.cumsum(s) - radius
    idx = np.arange(1, u.size + 1)
    cond = s - css / idx > 0
    rho = idx[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(u - theta, 0.0)


def _project_simplex_weighted(u: np.ndarray, w: np.ndarray, radius: float) -> np.ndarray:
    # x_i(lam) = max(0, u_i - lam / w_i); sum is decreasing and piecewise linear
    def total(lam):
        return float(np.sum(np.maximum(u - lam / w, 0.0))) - radius

    hi = float(np.max(u * w))
    lo = hi - radius * float(np.max(w)) - 1.0
    while total(lo) < 0:
        lo -= max(1.0, abs(lo))
    lam = brentq(total, lo, hi, xtol=1e-14, rtol=8.9e-16)
    return np.maximum(u - lam / w, 0.0)


# ---------------------------------------------------------------------------
# prox steps
# ---------------------------------------------------------------------------

def _prox_quadratic(gen, set_, linear, inv_step, anchor, tol):
    w = np.ones_like(anchor) if gen.kind == "euclidean" else gen.weights
    u = anchor - linear / (inv_step * w)
    if set_.kind == "whole_space":
        return u
    if set_.kind == "box":
        return np.clip(u, set_.lower, set_.upper)
    if set_.kind == "affine":
        return project_polyhedron(u, Aeq=set_.Aeq, beq=set_.beq, weights=w, tol=tol)
    if set_.kind == "halfspace_system":
        return project_polyhedron(u, G=set_.G, a=set_.a, weights=w, tol=tol)
    if set_.kind == "simplex":
        if gen.kind == "euclidean":
            return _project_simplex_sorted(u, set_.radius)
        return _project_simplex_weighted(u, w, set_.radius)
    raise ValueError(f"unknown set kind {set_.kind!r}")


def _prox_exp_quadratic(gen, set_, linear, inv_step, anchor, tol):
    if set_.kind not in ("whole_space", "box"):
        return _prox_generic(gen, set_, linear, inv_step, anchor, tol)
    lo = np.full_like(anchor, gen.lo)
    hi = np.full_like(anchor, gen.hi)
    if set_.kind == "box":
        lo = np.maximum(lo, set_.lower)
        hi = np.minimum(hi, set_.upper)
    out = np.empty_like(anchor)
    for i in range(anchor.size):
        # first-order condition: grad phi(x) = grad phi(anchor_i) - linear_i / t
        target = float(_exp_quad_grad(anchor[i:i + 1])[0]) - linear[i] / inv_step

        def slope(x):
            return x + 2.0 * x * np.exp(x * x) - target

        if slope(lo[i]) >= 0.0:
            out[i] = lo[i]
        elif slope(hi[i]) <= 0.0:
            out[i] = hi[i]
        else:
            out[i] = brentq(slope, lo[i], hi[i], xtol=tol, rtol=8.9e-16)
    return out


def _prox_generic(gen, set_, linear, inv_step, anchor, tol):
    # guarded projected gradient on the prox objective; needs finite L_psi
    L = gen.grad_lipschitz
    if not np.isfinite(L):
        raise ProxError("no closed form for this generator/set pair and the "
                        "generator has no finite gradient-Lipschitz constant")
    euclid = BregmanGenerator.euclidean()
    grad_anchor = gen.grad(anchor)
    step = 1.0 / (inv_step * L)
    x = anchor.copy()
    scale = 1.0 + float(np.linalg.norm(linear)) + inv_step
    max_iter = max(2000, int(20 * L * np.log(max(scale / tol, 10.0))))
    for _ in range(max_iter):
        g = linear + inv_step * (gen.grad(x) - grad_anchor)
        x_new = _prox_quadratic(euclid, set_, g, 1.0 / step, x, tol)
        gap = float(np.linalg.norm(x_new - x))
        x = x_new
        if gap <= tol:
            return x
    raise ProxError(f"generic prox solver failed to reach tol={tol}")


def prox_step(gen: BregmanGenerator, set_: SimpleSet, linear, inv_step: float,
              anchor, tol: float = DEFAULT_TOL_PROX,
              tol_feas: float = DEFAULT_TOL_FEAS) -> np.ndarray:
    """Minimize <linear, x> + inv_step * D(x, anchor) over the set.

    The anchor must be feasible; the minimizer is unique because the
    generator is strongly convex.
    """
    linear = _as_vector(linear)
    anchor = _as_vector(anchor)
    if linear.shape != anchor.shape:
        raise ValueError("dimension mismatch between linear term and anchor")
    if not inv_step > 0:
        raise ValueError("inv_step must be positive")
    if not set_.contains(anchor, tol_feas):
        raise ValueError("prox anchor is infeasible for the given set")
    return _prox_core(gen, set_, linear, inv_step, anchor, tol)


def _prox_core(gen, set_, linear, inv_step, anchor, tol):
    gen.check_domain(anchor)
    if gen.kind in ("euclidean", "diag_quadratic"):
        return _prox_quadratic(gen, set_, linear, inv_step, anchor, tol)
    if gen.kind == "exp_quadratic":
        return _prox_exp_quadratic(gen, set_, linear, inv_step, anchor, tol)
    return _prox_generic(gen, set_, linear, inv_step, anchor, tol)


def project(gen: BregmanGenerator, set_: SimpleSet, point,
            tol: float = DEFAULT_TOL_PROX) -> np.ndarray:
    """Bregman projection: the feasible point minimizing D(., point)."""
    point = _as_vector(point)
    return _prox_core(gen, set_, np.zeros_like(point), 1.0, point, tol)


def check_nonexpansive(gen: BregmanGenerator, set_: SimpleSet, pairs) -> float:
    """Max of ||P(u) - P(v)|| / ||u - v|| over the given point pairs."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty pair list")
    worst = 0.0
    for u, v in pairs:
        u = _as_vector(u)
        v = _as_vector(v)
        gap = float(np.linalg.norm(u - v))
        if gap == 0.0:
            raise ValueError("degenerate pair: identical points")
        pu = project(gen, set_, u)
        pv = project(gen, set_, v)
        worst = max(worst, float(np.linalg.norm(pu - pv)) / gap)
    return worst
