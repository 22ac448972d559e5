"""Single-area load-frequency-control plant.

State ordering used everywhere in the package::

    x = [dP_g, dP_m, d_omega, d_omega_hat, omega_dot_hat]
    u = [dP_c, dP_L]

dP_g governor output, dP_m mechanical power, d_omega true frequency
deviation, d_omega_hat / omega_dot_hat the frequency and ROCOF sensor
outputs.  All quantities are per-unit deviations.
"""

from dataclasses import dataclass, fields
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .expm import expm

N_STATES = 5
N_INPUTS = 2
IDX_D_OMEGA_HAT = 3
IDX_OMEGA_DOT_HAT = 4

MAX_STEP = 0.010
_COND_LIMIT = 1e12


class InvalidParameterError(ValueError):
    """A SystemParams field is outside its admissible range."""

    def __init__(self, field, value, reason):
        super().__init__(f"invalid parameter {field}={value!r}: {reason}")
        self.field = field


class SingularModelError(ValueError):
    pass


class StateVector(NamedTuple):
    dp_g: float = 0.0
    dp_m: float = 0.0
    d_omega: float = 0.0
    d_omega_hat: float = 0.0
    omega_dot_hat: float = 0.0


class InputVector(NamedTuple):
    dp_c: float = 0.0
    dp_l: float = 0.0


@dataclass(frozen=True)
class SystemParams:
    """Plant and local-controller constants (seconds / per-unit).

    ``droop_r`` is the governor droop, not the ROCOF relay limit.
    """

    tau_g: float = 0.2
    tau_t: float = 0.5
    tau_omega: float = 0.1
    tau_nu: float = 0.2
    inertia_m: float = 10.0
    damping_d: float = 0.8
    droop_r: float = 0.05
    gain_k: float = 1.0
    omega_ref: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v):
                raise InvalidParameterError(f.name, v, "must be finite")
        for name in ("tau_g", "tau_t", "tau_omega", "tau_nu", "inertia_m", "droop_r"):
            v = getattr(self, name)
            if v <= 0:
                raise InvalidParameterError(name, v, "must be > 0")
        if self.damping_d < 0:
            raise InvalidParameterError("damping_d", self.damping_d, "must be >= 0")


@dataclass(frozen=True, eq=False)
class ContinuousModel:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.a.shape != (N_STATES, N_STATES) or self.b.shape != (N_STATES, N_INPUTS):
            raise ValueError(f"expected A 5x5 and B 5x2, got {self.a.shape}, {self.b.shape}")


@dataclass(frozen=True, eq=False)
class DiscreteModel:
    a_d: np.ndarray
    b_d: np.ndarray
    t_s: float
    c_omega: np.ndarray
    c_nu: np.ndarray

    @property
    def c(self):
        return np.vstack([self.c_omega, self.c_nu])

    @cached_property
    def c_a_d(self):
        """Rows C_omega A_d and C_nu A_d."""
        return self.c @ self.a_d

    @cached_property
    def c_b_d(self):
        return self.c @ self.b_d


def selector_rows():
    c_omega = np.zeros(N_STATES)
    c_omega[IDX_D_OMEGA_HAT] = 1.0
    c_nu = np.zeros(N_STATES)
    c_nu[IDX_OMEGA_DOT_HAT] = 1.0
    return c_omega, c_nu


def build_continuous_model(params: SystemParams) -> ContinuousModel:
    """Assemble (A, B) of the single-area LFC model.

    The governor row carries the droop as ``-1/(R tau_g)``: speed-droop
    feedback must oppose the frequency deviation for A to be Hurwitz.
    """
    p = params
    tg, tt, tw, tn = p.tau_g, p.tau_t, p.tau_omega, p.tau_nu
    m, d, r = p.inertia_m, p.damping_d, p.droop_r
    a = np.array([
        [-1 / tg, 0.0, -1 / (r * tg), 0.0, 0.0],
        [1 / tt, -1 / tt, 0.0, 0.0, 0.0],
        [0.0, 1 / m, -d / m, 0.0, 0.0],
        [0.0, 0.0, 1 / tw, -1 / tw, 0.0],
        [0.0, 1 / (m * tn), -d / (m * tn), 0.0, -1 / tn],
    ])
    b = np.array([
        [1 / tg, 0.0],
        [0.0, 0.0],
        [0.0, -1 / m],
        [0.0, 0.0],
        [0.0, -1 / (m * tn)],
    ])
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularModelError(f"state matrix is numerically singular (cond={cond:.3g})")
    return ContinuousModel(a=a, b=b)


def discretize(model: ContinuousModel, t_s: float, allow_zero: bool = False) -> DiscreteModel:
    """Zero-order-hold discretization over ``t_s`` seconds.

    A_d comes from the Pade exponential of A*t_s; B_d is read off the
    upper-right block of exp([[A, B], [0, 0]] t_s).  When A is invertible
    B_d is also checked against A^-1 (A_d - I) B.
    """
    c_omega, c_nu = selector_rows()
    if t_s == 0 and allow_zero:
        return DiscreteModel(np.eye(N_STATES), np.zeros((N_STATES, N_INPUTS)), 0.0, c_omega, c_nu)
    if not t_s > 0:
        raise ValueError(f"discretization step must be > 0, got {t_s}")

    a, b = model.a, model.b
    a_d = expm(a * t_s)
    aug = np.zeros((N_STATES + N_INPUTS, N_STATES + N_INPUTS))
    aug[:N_STATES, :N_STATES] = a
    aug[:N_STATES, N_STATES:] = b
    b_d = expm(aug * t_s)[:N_STATES, N_STATES:]

    if np.linalg.cond(a) < _COND_LIMIT:
        b_d_direct = np.linalg.solve(a, (a_d - np.eye(N_STATES)) @ b)
        err = np.linalg.norm(b_d - b_d_direct)
        if err > 1e-8 * max(1.0, np.linalg.norm(b_d)):
            raise SingularModelError(f"B_d cross-check failed (Frobenius gap {err:.3g})")
    return DiscreteModel(a_d, b_d, float(t_s), c_omega, c_nu)


def predict_measurements(dm: DiscreteModel, x, u) -> tuple:
    """(d_omega_hat, omega_dot_hat) one horizon ahead with u held constant."""
    x_next = dm.a_d @ np.asarray(x, dtype=float) + dm.b_d @ np.asarray(u, dtype=float)
    if not np.all(np.isfinite(x_next)):
        raise ValueError("non-finite state or input in prediction")
    return float(x_next[IDX_D_OMEGA_HAT]), float(x_next[IDX_OMEGA_DOT_HAT])


def derivative(model: ContinuousModel, x, u) -> np.ndarray:
    return model.a @ x + model.b @ u


def _check_step(dt):
    if not 0 < dt <= MAX_STEP:
        raise ValueError(f"integration step must lie in (0, {MAX_STEP}] s, got {dt}")


def step_continuous(model: ContinuousModel, x, u, dt: float) -> np.ndarray:
    """One classical RK4 step of x' = Ax + Bu, u held over the step."""
    _check_step(dt)
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    k1 = derivative(model, x, u)
    k2 = derivative(model, x + 0.5 * dt * k1, u)
    k3 = derivative(model, x + 0.5 * dt * k2, u)
    k4 = derivative(model, x + dt * k3, u)
    return x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_propagator(model: ContinuousModel, dt: float):
    """Matrices (Phi, Gamma) with RK4 step x+ = Phi x + Gamma u.

    For a linear time-invariant right-hand side the four RK4 stages
    collapse to a truncated Taylor series of the exponential; the
    simulation loop uses this form to avoid per-step stage evaluation.
    """
    _check_step(dt)
    ha = model.a * dt
    ident = np.eye(N_STATES)
    ha2 = ha @ ha
    ha3 = ha2 @ ha
    phi = ident + ha + ha2 / 2 + ha3 / 6 + ha3 @ ha / 24
    gamma = dt * (ident + ha / 2 + ha2 / 6 + ha3 / 24) @ model.b
    return phi, gamma


def local_controller_step(params: SystemParams, d_omega_hat: float, integrator_state: float, dt: float):
    """Forward-Euler update of dP_c' = k (d_omega_ref - d_omega_hat).

    Returns ``(dp_c_ref, new_integrator_state)``; they are the same number,
    the integrator output is the governor reference.
    """
    if not dt > 0:
        raise ValueError(f"controller step must be > 0, got {dt}")
    new = integrator_state + dt * params.gain_k * (params.omega_ref - d_omega_hat)
    return new, new


def equilibrium(model: ContinuousModel, u) -> np.ndarray:
    """Steady state -A^-1 B u for a constant input."""
    return -np.linalg.solve(model.a, model.b @ np.asarray(u, dtype=float))
