"""Primal-dual iteration engine, step-size schedule, baseline, and monitors.

The accelerated iteration blends a fresh dual-informed primal gradient with
momentum corrections.  theta = 1 with beta = 0 recovers the accelerated
primal-dual scheme; theta = 0 recovers optimistic gradient descent-ascent.
The constant schedule comes from solving the two scalar quadratics that make
the per-step weight conditions hold; everything is re-verified numerically
after solving.
"""

import time
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DivergenceError, NumericalError, ScheduleError
from .geometry import BregmanGenerator, distance, project, prox_step
from .growth import GrowthModuli, varsigma_for
from .problems import SaddleProblem, SmoothnessConstants, SolutionSet

_DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class GapdParams:
    """Constant parameters (theta, alpha, beta, tau, sigma, varsigma) plus the
    Lyapunov block weights gamma_x, gamma_y and the iterate weights t_k = alpha^{-k}.

    All t_k-weighted quantities are evaluated through the ratio
    t_0 / t_K = alpha^K so nothing overflows.
    """

    theta: float
    alpha: float
    tau: float
    sigma: float
    beta: float = 0.0
    varsigma: float = 1.0
    gamma_x: float = 1.0
    gamma_y: float = 1.0
    l_psi_x: float = 1.0
    l_psi_y: float = 1.0
    condition: str = "two_sided_qfg"
    info: dict = field(default_factory=dict, compare=False)

    def validate(self, tol: float = 1e-9):
        if not (0.0 <= self.theta <= 1.0):
            raise ValueError("theta must lie in [0, 1]")
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must lie in (0, 1]")
        if not (self.tau > 0 and self.sigma > 0 and self.beta >= 0):
            raise ValueError("tau, sigma must be positive and beta nonnegative")
        if abs(self.beta - self.alpha * (1.0 - self.theta)) > tol * (1.0 + self.alpha):
            raise ValueError("beta must equal alpha * (1 - theta)")
        wx, wy = self.lyapunov_weights()
        if wx <= 0 or wy <= 0:
            raise ValueError("Lyapunov weight matrix must be positive: "
                             "need 1/tau > gamma_x beta and 1/sigma > gamma_y alpha")

    def lyapunov_weights(self):
        return (1.0 / self.tau - self.gamma_x * self.beta,
                1.0 / self.sigma - self.gamma_y * self.alpha)


@dataclass(frozen=True)
class GdaSteps:
    step_x: float
    step_y: float

    def __post_init__(self):
        if not (self.step_x > 0 and self.step_y > 0):
            raise ValueError("steps must be positive")


@dataclass(frozen=True)
class StopRule:
    max_iters: int = 100000
    rel_tol: float = 1e-8


def default_gda_step(sm: SmoothnessConstants) -> float:
    """Heuristic baseline step 1 / (8 L), L = max(L_xx, L_yy) + max(L_xy, L_yx).

    Deliberately conservative: the aggressive 1/(2L) choice is unstable on
    strongly skew-coupled instances and can otherwise edge out the momentum
    methods on easy ones.  Override per config for experiments.
    """
    L = max(sm.L_xx, sm.L_yy) + max(sm.L_xy, sm.L_yx)
    return 1.0 / (8.0 * L)


# ---------------------------------------------------------------------------
# step-size schedule
# ---------------------------------------------------------------------------

def _positive_root(A: float, B: float, C: float) -> float:
    # positive root of A t^2 + B t - C = 0 with A > 0, C >= 0
    disc = B * B + 4.0 * A * C
    return (-B + np.sqrt(disc)) / (2.0 * A)


def _step_condition_values(theta, alpha, beta, tau, sigma, sm, varsigma,
                           mu_x, mu_y, gx, gy, lpx, lpy):
    """The two weight-condition values C_x, C_y whose nonpositivity makes the
    per-step momentum inequality hold (unrelaxed forms)."""
    wx = (1.0 - theta) ** 2 * lpx ** 2 + beta
    wy = lpy ** 2 + alpha

    def over(num, den):
        return 0.0 if num == 0.0 else num / den

    c_x = (over(wx * sm.L_xx ** 2, gx) + over(wy * sm.L_yx ** 2, gy)
           + 0.5 * gx * wx - 0.5 * (1.0 / tau - theta * sm.L_xx))
    c_y = (over(wx * sm.L_xy ** 2, gx) + over(wy * sm.L_yy ** 2, gy)
           + 0.5 * gy * wy - 0.5 / sigma)
    return c_x, c_y


def derive_params(sm: SmoothnessConstants, moduli: GrowthModuli, theta: float,
                  L_psi_x: float = 1.0, L_psi_y: float = 1.0,
                  condition: Optional[str] = None,
                  verify_tol: float = 1e-9) -> GapdParams:
    """Constant schedule: contraction factor alpha from two scalar quadratics,
    then beta = alpha (1 - theta), tau = 2(1-alpha)/(varsigma alpha mu_x),
    sigma = 2(1-alpha)/(varsigma alpha mu_y).

    The dual-side quadratic coefficients are written out in closed form; the
    primal side is derived symmetrically from its weight condition, which
    picks up an extra theta L_xx term.  After solving, the weight conditions
    and the telescoping identities are re-verified numerically.
    """
    if not (0.0 <= theta <= 1.0):
        raise ValueError("theta must lie in [0, 1]")
    if not (L_psi_x >= 1.0 and L_psi_y >= 1.0):
        raise ValueError("generator gradient-Lipschitz constants are >= 1")
    varsigma, eff_condition = varsigma_for(condition or "auto", theta,
                                           available=moduli.condition)
    lpsi = max(L_psi_x, L_psi_y)

    gx = np.sqrt(2.0 * sm.L_xy ** 2 + 2.0 * sm.L_xx ** 2)
    gy = np.sqrt(2.0 * sm.L_yx ** 2 + 2.0 * sm.L_yy ** 2)

    def over(num, den):
        return 0.0 if num == 0.0 else num / den

    A_y = over(2.0 * sm.L_xy ** 2 * (1.0 - theta), gx) \
        + 2.0 * sm.L_yy ** 2 / gy + gy
    B_y = (lpsi ** 2 - 1.0) * A_y + varsigma * moduli.mu_y / 2.0
    alpha_y = _positive_root(A_y, B_y, lpsi ** 2 * A_y)

    A_x = over(2.0 * sm.L_xx ** 2 * (1.0 - theta), gx) \
        + 2.0 * sm.L_yx ** 2 / gy + gx * (1.0 - theta)
    B_x = (lpsi ** 2 - 1.0) * A_x + varsigma * moduli.mu_x / 2.0 + theta * sm.L_xx
    C_x_coef = lpsi ** 2 * A_x + theta * sm.L_xx
    alpha_x = _positive_root(A_x, B_x, C_x_coef)

    alpha = float(max(alpha_x, alpha_y))
    if not (0.0 < alpha < 1.0):
        raise ScheduleError(
            f"alpha = {alpha} outside (0, 1): the growth moduli are too small "
            f"relative to the smoothness constants for a contractive schedule")

    beta = alpha * (1.0 - theta)
    tau = 2.0 * (1.0 - alpha) / (varsigma * alpha * moduli.mu_x)
    sigma = 2.0 * (1.0 - alpha) / (varsigma * alpha * moduli.mu_y)

    c_x, c_y = _step_condition_values(theta, alpha, beta, tau, sigma, sm,
                                      varsigma, moduli.mu_x, moduli.mu_y,
                                      gx, gy, L_psi_x, L_psi_y)
    scale = abs(1.0 / tau) + abs(1.0 / sigma) + gx + gy + 1.0
    t_x = 1.0 / tau - alpha * (1.0 / tau + varsigma * moduli.mu_x / 2.0)
    t_y = 1.0 / sigma - alpha * (1.0 / sigma + varsigma * moduli.mu_y / 2.0)
    if max(c_x, c_y, t_x, t_y) > verify_tol * scale:
        raise NumericalError(
            f"schedule verification failed (C_x={c_x:.3e}, C_y={c_y:.3e}, "
            f"step-bound margins {t_x:.3e}, {t_y:.3e}); this signals a "
            f"derivation bug")

    params = GapdParams(theta=float(theta), alpha=alpha, beta=float(beta),
                        tau=float(tau), sigma=float(sigma),
                        varsigma=float(varsigma),
                        gamma_x=float(gx), gamma_y=float(gy),
                        l_psi_x=L_psi_x, l_psi_y=L_psi_y,
                        condition=eff_condition,
                        info={"alpha_x_star": float(alpha_x),
                              "alpha_y_star": float(alpha_y),
                              "c_x": float(c_x), "c_y": float(c_y),
                              "mu_x": moduli.mu_x, "mu_y": moduli.mu_y})
    params.validate()
    return params


# ---------------------------------------------------------------------------
# iteration state and steps
# ---------------------------------------------------------------------------

class IterateState:
    """Current and previous iterates with cached gradients.

    At k = 0 the previous iterate equals the current one, so both momentum
    terms start at zero.
    """

    __slots__ = ("x", "y", "x_prev", "y_prev", "gx", "gy", "gx_prev",
                 "gy_prev", "k")

    def __init__(self, x, y, x_prev, y_prev, gx, gy, gx_prev, gy_prev, k):
        self.x, self.y = x, y
        self.x_prev, self.y_prev = x_prev, y_prev
        self.gx, self.gy = gx, gy
        self.gx_prev, self.gy_prev = gx_prev, gy_prev
        self.k = k

    @classmethod
    def start(cls, p: SaddleProblem, x0, y0) -> "IterateState":
        x0 = np.asarray(x0, float)
        y0 = np.asarray(y0, float)
        gx = p.grad_x(x0, y0)
        gy = p.grad_y(x0, y0)
        return cls(x0, y0, x0.copy(), y0.copy(), gx, gy, gx.copy(), gy.copy(), 0)

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @property
    def q_x(self) -> np.ndarray:
        return self.gx - self.gx_prev

    @property
    def q_y(self) -> np.ndarray:
        return self.gy - self.gy_prev


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalError("non-finite gradient encountered")


def gapd_step(p: SaddleProblem, geom_x: BregmanGenerator,
              geom_y: BregmanGenerator, params: GapdParams,
              st: IterateState) -> IterateState:
    """One iteration: dual momentum, dual prox ascent, primal momentum, the
    theta-blended primal direction using the fresh dual iterate, primal prox."""
    th, al, be = params.theta, params.alpha, params.beta
    q_y = st.q_y
    y_new = prox_step(geom_y, p.set_y, -(st.gy + al * q_y), 1.0 / params.sigma,
                      st.y) if p.dim_y else st.y.copy()
    q_x = st.q_x
    if th > 0.0:
        s = th * p.grad_x(st.x, y_new) + (1.0 - th) * st.gx + be * q_x
    else:
        s = st.gx + be * q_x
    x_new = prox_step(geom_x, p.set_x, s, 1.0 / params.tau, st.x)
    gx_new = p.grad_x(x_new, y_new)
    gy_new = p.grad_y(x_new, y_new)
    _check_finite(gx_new, gy_new)
    return IterateState(x_new, y_new, st.x, st.y, gx_new, gy_new,
                        st.gx, st.gy, st.k + 1)


def gda_step(p: SaddleProblem, geom_x: BregmanGenerator,
             geom_y: BregmanGenerator, steps: GdaSteps,
             st: IterateState) -> IterateState:
    """Simultaneous prox-gradient descent/ascent: both blocks read z_k."""
    x_new = prox_step(geom_x, p.set_x, st.gx, 1.0 / steps.step_x, st.x)
    y_new = prox_step(geom_y, p.set_y, -st.gy, 1.0 / steps.step_y,
                      st.y) if p.dim_y else st.y.copy()
    gx_new = p.grad_x(x_new, y_new)
    gy_new = p.grad_y(x_new, y_new)
    _check_finite(gx_new, gy_new)
    return IterateState(x_new, y_new, st.x, st.y, gx_new, gy_new,
                        st.gx, st.gy, st.k + 1)


# ---------------------------------------------------------------------------
# residuals and traces
# ---------------------------------------------------------------------------

def _residual_from_grads(p: SaddleProblem, x, y, gx, gy) -> float:
    if p.set_x.kind == "whole_space" and (p.dim_y == 0 or p.set_y.kind == "whole_space"):
        return float(np.sqrt(np.dot(gx, gx) + np.dot(gy, gy)))
    euclid = BregmanGenerator.euclidean()
    px = project(euclid, p.set_x, x - gx)
    py = project(euclid, p.set_y, y + gy) if p.dim_y else y
    dx = x - px
    dy = y - py
    return float(np.sqrt(np.dot(dx, dx) + np.dot(dy, dy)))


def residual(p: SaddleProblem, z) -> float:
    """Natural residual ||z - P(z - F(z))|| with unit step and Euclidean
    projection; reduces to ||F(z)|| on unconstrained problems."""
    x, y = p.split(z)
    return _residual_from_grads(p, x, y, p.grad_x(x, y), p.grad_y(x, y))


class ConvergenceTrace:
    """Per-iteration records of one run.

    Arrays are aligned with `ks`; entries that do not apply (no solution-set
    monitor, baseline method) are NaN.  `bregman_dist0` is the weighted
    initial distance used by the contraction monitor.
    """

    def __init__(self, method: str, theta=None):
        self.method = method
        self.theta = theta
        self.ks = []
        self.residuals = []
        self.dist_sq = []
        self.lyapunov = []
        self.lambda_k = []
        self.momentum_surplus = []
        self.elapsed_ns = []
        self.residual0 = np.nan
        self.bregman_dist0 = np.nan
        self.alpha = np.nan

    def append(self, k, res, dist=np.nan, lyap=np.nan, lam=np.nan,
               surplus=np.nan, elapsed=0):
        self.ks.append(int(k))
        self.residuals.append(float(res))
        self.dist_sq.append(float(dist))
        self.lyapunov.append(float(lyap))
        self.lambda_k.append(float(lam))
        self.momentum_surplus.append(float(surplus))
        self.elapsed_ns.append(int(elapsed))

    def finalize(self):
        self.ks = np.asarray(self.ks, dtype=int)
        self.residuals = np.asarray(self.residuals)
        self.dist_sq = np.asarray(self.dist_sq)
        self.lyapunov = np.asarray(self.lyapunov)
        self.lambda_k = np.asarray(self.lambda_k)
        self.momentum_surplus = np.asarray(self.momentum_surplus)
        self.elapsed_ns = np.asarray(self.elapsed_ns, dtype=np.int64)
        return self

    def rel_residuals(self) -> np.ndarray:
        if self.residual0 == 0.0:
            out = np.zeros_like(self.residuals)
            out[0] = 1.0
            return out
        return self.residuals / self.residual0

    def iterations_to(self, rel_tol: float):
        rel = self.rel_residuals()
        hit = np.nonzero(rel <= rel_tol)[0]
        if hit.size == 0:
            return None
        return int(self.ks[hit[0]])


def contraction_factor(values: np.ndarray, ks=None, floor: float = 1e-24):
    """Per-iteration factor from the least-squares slope of log(values).

    Fits only the decaying window above `floor` times the initial value,
    which excludes the numerical noise floor after convergence.
    """
    values = np.asarray(values, dtype=float)
    ks = np.arange(values.size) if ks is None else np.asarray(ks, dtype=float)
    v0 = values[0] if values.size else np.nan
    mask = np.isfinite(values) & (values > max(v0 * floor, 0.0))
    if np.sum(mask) < 3 or not np.isfinite(v0) or v0 <= 0:
        return None
    kk = ks[mask]
    vv = np.log(values[mask])
    slope = np.polyfit(kk, vv, 1)[0]
    return float(np.exp(slope))


def run(p: SaddleProblem, geom_x: BregmanGenerator, geom_y: BregmanGenerator,
        method: Union[GapdParams, GdaSteps], z0, stop: StopRule,
        monitor: Optional[SolutionSet] = None) -> ConvergenceTrace:
    """Iterate until the relative natural residual or iteration budget stops us.

    With a solution-set monitor, each record carries the squared Euclidean
    distance to the solution set and the weighted (block-Lyapunov) distance;
    accelerated runs also record the per-step momentum remainder and the
    ex-post step-condition surplus.  A residual exceeding 1e6 times the
    initial one aborts with a diagnostic.
    """
    x0, y0 = p.split(z0)
    if not p.set_x.contains(x0):
        raise ValueError("z0 infeasible in the x block")
    if p.dim_y and not p.set_y.contains(y0):
        raise ValueError("z0 infeasible in the y block")

    is_gapd = isinstance(method, GapdParams)
    trace = ConvergenceTrace("gapd" if is_gapd else "gda",
                             theta=method.theta if is_gapd else None)
    st = IterateState.start(p, x0, y0)
    res = _residual_from_grads(p, st.x, st.y, st.gx, st.gy)
    trace.residual0 = res
    if is_gapd:
        trace.alpha = method.alpha

    def weighted_dists(state):
        if monitor is None:
            return np.nan, np.nan
        z = state.z
        zbar = monitor.project(z)
        d = z - zbar
        dist = float(np.dot(d, d))
        if not is_gapd:
            return dist, np.nan
        wx, wy = method.lyapunov_weights()
        xb, yb = zbar[:p.dim_x], zbar[p.dim_x:]
        lyap = wx * distance(geom_x, xb, state.x)
        if p.dim_y:
            lyap += wy * distance(geom_y, yb, state.y)
        return dist, lyap

    dist0, lyap0 = weighted_dists(st)
    if monitor is not None and is_gapd:
        zbar0 = monitor.project(st.z)
        d0 = (1.0 / method.tau) * distance(geom_x, zbar0[:p.dim_x], st.x)
        if p.dim_y:
            d0 += (1.0 / method.sigma) * distance(geom_y, zbar0[p.dim_x:], st.y)
        trace.bregman_dist0 = d0

    t0 = time.perf_counter_ns()
    trace.append(0, res, dist0, lyap0, elapsed=0)

    guard = _DIVERGENCE_FACTOR * max(res, 1e-300)
    while st.k < stop.max_iters:
        if res <= stop.rel_tol * trace.residual0:
            break
        if is_gapd:
            new_st = gapd_step(p, geom_x, geom_y, method, st)
        else:
            new_st = gda_step(p, geom_x, geom_y, method, st)
        lam = surplus = np.nan
        if is_gapd and monitor is not None:
            lam, surplus = _step_diagnostics(p, geom_x, geom_y, method, st, new_st)
        res = _residual_from_grads(p, new_st.x, new_st.y, new_st.gx, new_st.gy)
        if res > guard:
            raise DivergenceError(
                f"residual {res:.3e} exceeds 1e6 x initial at iteration "
                f"{new_st.k}; aborting")
        dist, lyap = weighted_dists(new_st)
        trace.append(new_st.k, res, dist, lyap, lam, surplus,
                     time.perf_counter_ns() - t0)
        st = new_st
    return trace.finalize()


def _step_diagnostics(p, geom_x, geom_y, params, st, new_st):
    """Momentum remainder Lambda_k and the ex-post step-condition surplus.

    The surplus uses the next momentum q_{k+1}, so it is evaluated after the
    step; nonpositive values confirm the schedule's per-step inequality along
    this trajectory.
    """
    th, al, be = params.theta, params.alpha, params.beta
    gx_, gy_ = params.gamma_x, params.gamma_y
    dx = new_st.x - st.x
    dy = new_st.y - st.y
    q_x, q_y = st.q_x, st.q_y
    dD = (1.0 / params.tau - th * p.smoothness.L_xx) * distance(geom_x, new_st.x, st.x)
    if p.dim_y:
        dD += (1.0 / params.sigma) * distance(geom_y, new_st.y, st.y)
    lam = -(be * float(np.dot(q_x, dx)) + al * float(np.dot(q_y, dy))) - dD

    q1_x, q1_y = new_st.q_x, new_st.q_y
    nq1 = np.sqrt(float(np.dot(q1_x, q1_x)) + float(np.dot(q1_y, q1_y)))
    ct_x = (1.0 - th) ** 2 * params.l_psi_x ** 2
    ct_y = params.l_psi_y ** 2
    ndz = np.sqrt(ct_x * float(np.dot(dx, dx)) + ct_y * float(np.dot(dy, dy)))

    def gb_norm_sq(qx, qy):
        val = (be / gx_) * float(np.dot(qx, qx)) if gx_ > 0 else 0.0
        val += (al / gy_) * float(np.dot(qy, qy)) if gy_ > 0 else 0.0
        return val

    surplus = nq1 * ndz + lam - 0.5 * gb_norm_sq(q_x, q_y) \
        + (1.0 / (2.0 * al)) * gb_norm_sq(q1_x, q1_y)
    return lam, surplus


# ---------------------------------------------------------------------------
# monitors
# ---------------------------------------------------------------------------

def lyapunov_check(trace: ConvergenceTrace, params: GapdParams) -> float:
    """Max relative violation of the contraction bound over the trace.

    The bound says the weighted distance at iteration K is at most alpha^K
    times the initial weighted distance (t_0 / t_K = alpha^K under
    t_k = alpha^{-k}); the violation is [lhs - alpha^K rhs]_+ / rhs.
    """
    if not np.all(np.isfinite(trace.lyapunov)) or not np.isfinite(trace.bregman_dist0):
        raise ValueError("missing monitor data: run with a solution-set monitor")
    rhs = trace.bregman_dist0
    if rhs == 0.0:
        return 0.0
    bound = rhs * params.alpha ** trace.ks.astype(float)
    viol = (trace.lyapunov - bound) / rhs
    return float(np.max(np.maximum(viol, 0.0)))


@dataclass(frozen=True)
class StepsizeReport:
    """Numeric check of the schedule conditions along (optionally) a trace."""

    coupling_residual: float
    step_bound_margin_x: float
    step_bound_margin_y: float
    c_x: float
    c_y: float
    ctilde_x: float
    ctilde_y: float
    max_momentum_surplus: Optional[float]
    ok_coupling: bool
    ok_step_bounds: bool
    ok_momentum_surplus: Optional[bool]

    @property
    def ok(self) -> bool:
        return self.ok_coupling and self.ok_step_bounds and (self.ok_momentum_surplus is not False)


def stepsize_condition_check(params: GapdParams, sm: SmoothnessConstants,
                             moduli: GrowthModuli,
                             trace: Optional[ConvergenceTrace] = None,
                             tol: float = 1e-9) -> StepsizeReport:
    """Check the constant-schedule conditions.

    The telescoping identities are algebraic in the constant case; the
    step-bound inequalities are evaluated numerically; the momentum surplus
    condition involves the next iterate, so it is reported ex post from the
    trace when one is provided.
    """
    r_coupling = abs(params.beta - params.alpha * (1.0 - params.theta))
    m_step_x = params.alpha * (1.0 / params.tau + params.varsigma * moduli.mu_x / 2.0) \
        - 1.0 / params.tau
    m_step_y = params.alpha * (1.0 / params.sigma + params.varsigma * moduli.mu_y / 2.0) \
        - 1.0 / params.sigma
    c_x, c_y = _step_condition_values(
        params.theta, params.alpha, params.beta, params.tau, params.sigma, sm,
        params.varsigma, moduli.mu_x, moduli.mu_y, params.gamma_x,
        params.gamma_y, params.l_psi_x, params.l_psi_y)
    scale = abs(1.0 / params.tau) + abs(1.0 / params.sigma) + 1.0

    max_surplus = None
    ok_momentum_surplus = None
    if trace is not None:
        vals = trace.momentum_surplus[np.isfinite(trace.momentum_surplus)]
        if vals.size:
            max_surplus = float(np.max(vals))
            ok_momentum_surplus = max_surplus <= tol * scale
    return StepsizeReport(
        coupling_residual=float(r_coupling),
        step_bound_margin_x=float(m_step_x), step_bound_margin_y=float(m_step_y),
        c_x=float(c_x), c_y=float(c_y),
        ctilde_x=(1.0 - params.theta) ** 2 * params.l_psi_x ** 2,
        ctilde_y=params.l_psi_y ** 2,
        max_momentum_surplus=max_surplus,
        ok_coupling=r_coupling <= tol * (1.0 + params.alpha),
        ok_step_bounds=(m_step_x >= -tol * scale and m_step_y >= -tol * scale
                and c_x <= tol * scale and c_y <= tol * scale),
        ok_momentum_surplus=ok_momentum_surplus,
    )


def auxiliary_rate_bound(params: GapdParams, moduli: GrowthModuli,
                         sm: SmoothnessConstants, K: int,
                         bregman_dist0_unweighted: float) -> float:
    """Auxiliary diagnostic bound alpha^{K+1} / ((1-alpha) c) on the weighted
    initial distance; reported alongside the contraction monitor, which is
    the ground-truth inequality."""
    c = min(params.theta * sm.L_xx + np.sqrt(2 * sm.L_xx ** 2 + 2 * sm.L_yx ** 2),
            np.sqrt(2 * sm.L_xy ** 2 + 2 * sm.L_yy ** 2))
    M_w = params.varsigma * 0.5 * max(moduli.mu_x, moduli.mu_y)
    return params.alpha ** (K + 1) / ((1.0 - params.alpha) * c) * M_w \
        * bregman_dist0_unweighted
