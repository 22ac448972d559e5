"""Linear Kalman filter over the five LFC states.

Measurements are the two sensor states (d_omega_hat, omega_dot_hat); the
filter runs on its own ZOH discretization at the simulation step.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import N_STATES, ContinuousModel, DiscreteModel, selector_rows

_SYM_TOL = 1e-12


class EstimatorError(RuntimeError):
    pass


def _check_cov(name, m, shape, strict):
    m = np.asarray(m, dtype=float)
    if m.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {m.shape}")
    if not np.allclose(m, m.T, atol=_SYM_TOL, rtol=0):
        raise ValueError(f"{name} is not symmetric")
    lam = np.linalg.eigvalsh(0.5 * (m + m.T)).min()
    if strict and lam <= 0:
        raise ValueError(f"{name} must be positive definite (min eigenvalue {lam:.3g})")
    if not strict and lam < -_SYM_TOL:
        raise ValueError(f"{name} must be positive semidefinite (min eigenvalue {lam:.3g})")
    return m


@dataclass(frozen=True, eq=False)
class KalmanConfig:
    process_noise_cov: np.ndarray = field(default_factory=lambda: 1e-8 * np.eye(N_STATES))
    measurement_noise_cov: np.ndarray = field(default_factory=lambda: np.diag([1e-8, 1e-8]))
    initial_state: np.ndarray = field(default_factory=lambda: np.zeros(N_STATES))
    initial_cov: np.ndarray = field(default_factory=lambda: 1e-6 * np.eye(N_STATES))
    dt: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "process_noise_cov",
                           _check_cov("process_noise_cov", self.process_noise_cov, (5, 5), False))
        object.__setattr__(self, "measurement_noise_cov",
                           _check_cov("measurement_noise_cov", self.measurement_noise_cov, (2, 2), True))
        object.__setattr__(self, "initial_cov",
                           _check_cov("initial_cov", self.initial_cov, (5, 5), True))
        x0 = np.asarray(self.initial_state, dtype=float)
        if x0.shape != (N_STATES,) or not np.all(np.isfinite(x0)):
            raise ValueError("initial_state must be 5 finite numbers")
        object.__setattr__(self, "initial_state", x0)
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")


@dataclass(eq=False)
class EstimatorState:
    x_hat: np.ndarray
    p: np.ndarray
    step: int = 0

    @classmethod
    def from_config(cls, cfg: KalmanConfig):
        return cls(cfg.initial_state.copy(), cfg.initial_cov.copy())


def observability_rank(model: ContinuousModel, c=None, rtol=1e-8) -> int:
    """Numerical rank of [C; CA; ...; CA^4], defaulting C to the sensor selectors."""
    if c is None:
        c = np.vstack(selector_rows())
    c = np.atleast_2d(np.asarray(c, dtype=float))
    blocks = [c]
    for _ in range(N_STATES - 1):
        blocks.append(blocks[-1] @ model.a)
    sv = np.linalg.svd(np.vstack(blocks), compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def kf_predict(est: EstimatorState, cfg: KalmanConfig, dm: DiscreteModel, u) -> EstimatorState:
    x = dm.a_d @ est.x_hat + dm.b_d @ np.asarray(u, dtype=float)
    p = dm.a_d @ est.p @ dm.a_d.T + cfg.process_noise_cov
    return EstimatorState(x, p, est.step)


def kf_update(est: EstimatorState, cfg: KalmanConfig, z) -> EstimatorState:
    """Measurement update with a Joseph-form covariance."""
    z = np.asarray(z, dtype=float)
    p = est.p
    # C selects states 3 and 4, so C P C^T and P C^T are slices
    pct = p[:, 3:5]
    s = pct[3:5, :] + cfg.measurement_noise_cov
    # 2x2 symmetric innovation covariance: closed-form eigenvalues and inverse
    (s00, s10), (s01, s11) = s.tolist()
    s01 = 0.5 * (s01 + s10)
    det = s00 * s11 - s01 * s01
    half_tr = 0.5 * (s00 + s11)
    disc = math.sqrt(max(half_tr * half_tr - det, 0.0))
    lam_min, lam_max = half_tr - disc, half_tr + disc
    if not (det > 0 and lam_min > 0 and lam_max < 1e14 * lam_min):
        raise EstimatorError(f"innovation covariance numerically singular at step {est.step}")
    s_inv = np.array([[s11, -s01], [-s01, s00]]) / det
    k = pct @ s_inv
    innov = z - est.x_hat[3:5]
    x = est.x_hat + k @ innov
    ikc = np.eye(N_STATES)
    ikc[:, 3:5] -= k
    p = ikc @ p @ ikc.T + k @ cfg.measurement_noise_cov @ k.T
    p = 0.5 * (p + p.T)
    return EstimatorState(x, p, est.step + 1)


def kf_step(est: EstimatorState, cfg: KalmanConfig, dm_filter: DiscreteModel, u, z) -> EstimatorState:
    """Predict with the input applied over the last step, then update with z.

    ``dm_filter`` must be discretized at the filter step ``cfg.dt``.
    """
    if abs(dm_filter.t_s - cfg.dt) > 1e-12:
        raise ValueError(f"filter model step {dm_filter.t_s} does not match cfg.dt {cfg.dt}")
    return kf_update(kf_predict(est, cfg, dm_filter, u), cfg, z)


def kalman_gain(est: EstimatorState, cfg: KalmanConfig) -> np.ndarray:
    """Gain that :func:`kf_update` would apply to the (predicted) covariance."""
    pct = est.p[:, 3:5]
    return pct @ np.linalg.inv(pct[3:5, :] + cfg.measurement_noise_cov)


class SteadyStateTracker:
    """Detects when the Riccati recursion has reached its fixed point.

    Once the covariance stops changing (relative change below ``rtol`` for
    ``patience`` consecutive steps) the gain is frozen and subsequent steps
    only propagate the mean, which is what the full recursion would do to
    within round-off.
    """

    def __init__(self, rtol=1e-13, patience=50):
        self.rtol = rtol
        self.patience = patience
        self._calm = 0
        self._prev = None
        self.gain = None
        self.p = None

    def observe(self, est: EstimatorState, cfg: KalmanConfig, dm: DiscreteModel):
        if self._prev is not None:
            scale = np.abs(est.p).max()
            if np.abs(est.p - self._prev).max() <= self.rtol * scale:
                self._calm += 1
            else:
                self._calm = 0
            if self._calm >= self.patience:
                self.p = est.p.copy()
                self.gain = kalman_gain(kf_predict(est, cfg, dm, np.zeros(2)), cfg)
        self._prev = est.p

    @property
    def frozen(self):
        return self.gain is not None

    def step(self, est: EstimatorState, dm: DiscreteModel, u, z) -> EstimatorState:
        x = dm.a_d @ est.x_hat + dm.b_d @ np.asarray(u, dtype=float)
        x = x + self.gain @ (np.asarray(z, dtype=float) - x[3:5])
        return EstimatorState(x, self.p, est.step + 1)
