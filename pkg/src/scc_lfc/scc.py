"""Barrier-function safety filter for the governor control signal.

Two barriers are built on the measurements predicted one horizon ahead,

    h_omega = F_eff - d_omega_hat(t + T_s)^2
    h_nu    = R_eff - omega_dot_hat(t + T_s)^2

and turned into log barriers B = -log(h / (1 + h)).  The filter keeps
dB/dt - alpha / B <= 0 for both, which is affine in the scalar dP_c, so
the quadratic program reduces to clamping the reference onto an interval.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

import numpy as np

from .dynamics import ContinuousModel, DiscreteModel

MODIFIED_TOL = 1e-12


class LoadInputMode(str, Enum):
    MEASURED = "measured"
    ZERO = "zero"


class ActiveConstraint(str, Enum):
    NONE = "none"
    FREQUENCY = "frequency"
    ROCOF = "rocof"
    BOTH = "both"


@dataclass(frozen=True)
class SafetyLimits:
    """Protection bounds: absolute frequency thresholds and a ROCOF limit.

    ``squared`` selects the barrier level: with True (default) the barriers
    use F^2 and R^2 so that h >= 0 is exactly |d_omega_hat| <= F and
    |omega_dot_hat| <= R.  With False, F and R enter unsquared, which
    only bounds the deviations by sqrt(F) and sqrt(R).
    """

    f_over: float = 1.03
    f_under: float = 0.942
    rocof_limit: float = 0.05
    squared: bool = True

    def __post_init__(self):
        if not self.f_over > 1.0 > self.f_under:
            raise ValueError(f"need f_over > 1 > f_under, got {self.f_over}, {self.f_under}")
        if not self.rocof_limit > 0:
            raise ValueError(f"rocof_limit must be > 0, got {self.rocof_limit}")

    @property
    def f_dev(self) -> float:
        return min(self.f_over - 1.0, 1.0 - self.f_under)

    @property
    def omega_level(self) -> float:
        return self.f_dev**2 if self.squared else self.f_dev

    @property
    def rocof_level(self) -> float:
        return self.rocof_limit**2 if self.squared else self.rocof_limit


@dataclass(frozen=True)
class SccConfig:
    alpha: float = 20.0
    t_s: float = 0.25
    h_floor: float = 1e-6
    load_input_mode: LoadInputMode = LoadInputMode.MEASURED

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.t_s > 0:
            raise ValueError(f"t_s must be > 0, got {self.t_s}")
        if not 0 < self.h_floor <= 1e-3:
            raise ValueError(f"h_floor must lie in (0, 1e-3], got {self.h_floor}")
        object.__setattr__(self, "load_input_mode", LoadInputMode(self.load_input_mode))


@dataclass(frozen=True, eq=False)
class BarrierEvaluation:
    h_omega: float
    h_nu: float
    b_omega: float
    b_nu: float
    grad_h_omega: np.ndarray
    grad_h_nu: np.ndarray
    floored_omega: bool
    floored_nu: bool
    # barrier values actually used in the log / gradient terms
    h_omega_eff: float
    h_nu_eff: float


@dataclass(frozen=True)
class AffineConstraint:
    """slope * u + intercept <= 0."""

    slope: float
    intercept: float
    name: str = ""

    def value(self, u):
        return self.slope * u + self.intercept


@dataclass(frozen=True)
class FilterResult:
    dp_c_star: float
    dp_c_ref: float
    modified: bool
    alarm: bool
    feasible: bool
    active_constraint: ActiveConstraint
    admissible_interval: Tuple[float, float]


def log_barrier(h: float) -> float:
    return -math.log(h / (1.0 + h))


def eval_barriers(dm: DiscreteModel, limits: SafetyLimits, x, u, cfg: SccConfig) -> BarrierEvaluation:
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    p_omega, p_nu = (dm.c_a_d @ x + dm.c_b_d @ u).tolist()

    h_omega = limits.omega_level - p_omega * p_omega
    h_nu = limits.rocof_level - p_nu * p_nu
    h_omega_eff = max(h_omega, cfg.h_floor)
    h_nu_eff = max(h_nu, cfg.h_floor)

    return BarrierEvaluation(
        h_omega=h_omega,
        h_nu=h_nu,
        b_omega=log_barrier(h_omega_eff),
        b_nu=log_barrier(h_nu_eff),
        grad_h_omega=-2.0 * p_omega * dm.c_a_d[0],
        grad_h_nu=-2.0 * p_nu * dm.c_a_d[1],
        floored_omega=h_omega <= cfg.h_floor,
        floored_nu=h_nu <= cfg.h_floor,
        h_omega_eff=h_omega_eff,
        h_nu_eff=h_nu_eff,
    )


def barrier_rate(model: ContinuousModel, grad_h, h_eff, x, u) -> float:
    """dB/dt = -(dh/dx)(Ax + Bu) / (h + h^2) evaluated directly."""
    xdot = model.a @ np.asarray(x, dtype=float) + model.b @ np.asarray(u, dtype=float)
    return float(-(grad_h @ xdot) / (h_eff + h_eff * h_eff))


def constraint_coefficients(
    model: ContinuousModel, ev: BarrierEvaluation, x, dp_l: float, cfg: SccConfig
) -> List[AffineConstraint]:
    """Rewrite dB/dt - alpha/B <= 0 as slope * dP_c + intercept <= 0.

    Returns the frequency constraint first, then the ROCOF one.
    """
    x = np.asarray(x, dtype=float)
    if cfg.load_input_mode is LoadInputMode.ZERO:
        dp_l = 0.0
    drift = model.a @ x + model.b[:, 1] * dp_l
    grads = np.vstack([ev.grad_h_omega, ev.grad_h_nu])
    g_b = (grads @ model.b[:, 0]).tolist()
    g_drift = (grads @ drift).tolist()
    out = []
    for i, (name, h, bval) in enumerate((
        ("frequency", ev.h_omega_eff, ev.b_omega),
        ("rocof", ev.h_nu_eff, ev.b_nu),
    )):
        den = h + h * h
        slope = -g_b[i] / den
        intercept = -g_drift[i] / den - cfg.alpha / bval
        out.append(AffineConstraint(slope, intercept, name))
    return out


def admissible_interval(constraints) -> Tuple[float, float, bool]:
    """Intersection of the half-lines; returns (lower, upper, vacuous_ok).

    ``vacuous_ok`` is False when some constraint has zero slope and a
    positive intercept, i.e. it fails for every u.
    """
    lo, hi = -np.inf, np.inf
    ok = True
    for c in constraints:
        if c.slope > 0:
            hi = min(hi, -c.intercept / c.slope)
        elif c.slope < 0:
            lo = max(lo, -c.intercept / c.slope)
        elif c.intercept > 0:
            ok = False
    return lo, hi, ok


def filter_control(dp_c_ref: float, constraints) -> FilterResult:
    """Closed-form solution of min (u - dp_c_ref)^2 / 2 s.t. the constraints.

    ``constraints`` is ordered (frequency, rocof) as produced by
    :func:`constraint_coefficients`; the order only matters for reporting
    which one is active.

    An empty interval falls back to the midpoint of the crossed bounds,
    which minimizes the largest distance to either half-line.
    """
    constraints = list(constraints)
    lo, hi, ok = admissible_interval(constraints)
    if lo > hi:
        u = 0.5 * (lo + hi)
        feasible = False
    else:
        u = min(max(dp_c_ref, lo), hi)
        feasible = ok
    modified = bool(abs(u - dp_c_ref) > MODIFIED_TOL)
    if not modified:
        u = dp_c_ref

    active = ActiveConstraint.NONE
    if modified:
        if lo > hi:
            active = ActiveConstraint.BOTH
        else:
            hits = [c.slope != 0 and -c.intercept / c.slope == u for c in constraints[:2]]
            if all(hits) and len(hits) == 2:
                active = ActiveConstraint.BOTH
            elif hits and hits[0]:
                active = ActiveConstraint.FREQUENCY
            elif len(hits) == 2 and hits[1]:
                active = ActiveConstraint.ROCOF
    return FilterResult(
        dp_c_star=float(u),
        dp_c_ref=float(dp_c_ref),
        modified=modified,
        alarm=modified,
        feasible=feasible,
        active_constraint=active,
        admissible_interval=(float(lo), float(hi)),
    )


def scc_step(dm, model, limits, cfg, x_est, dp_c_ref, dp_l):
    """Filter one governor reference.

    The barriers are evaluated with the incoming reference held over the
    horizon; the resulting constraints then restrict the outgoing signal.
    Returns ``(FilterResult, BarrierEvaluation)``.
    """
    dp_l_pred = dp_l if cfg.load_input_mode is LoadInputMode.MEASURED else 0.0
    ev = eval_barriers(dm, limits, x_est, (dp_c_ref, dp_l_pred), cfg)
    cons = constraint_coefficients(model, ev, x_est, dp_l, cfg)
    return filter_control(dp_c_ref, cons), ev
