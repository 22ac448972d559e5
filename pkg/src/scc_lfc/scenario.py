"""Closed-loop scenario runner, YAML config I/O and CSV traces.

Per step, in order: sensors -> local integral controller -> attacker ->
Kalman filter -> safety filter -> relays -> record -> plant RK4 step.
Relays read the sensor outputs at the start of the step, so a record at
time t holds the state x(t), the controls applied over [t, t + dt) and
the relay status after evaluating x(t).
"""

import csv
import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
import yaml

from .attacks import AttackKind, AttackSpec, DisturbanceSpec, attack_signal, resonant_frequency
from .dynamics import (
    IDX_D_OMEGA_HAT,
    IDX_OMEGA_DOT_HAT,
    N_STATES,
    SystemParams,
    build_continuous_model,
    discretize,
    local_controller_step,
    rk4_propagator,
)
from .estimator import EstimatorState, KalmanConfig, SteadyStateTracker, kf_step, kf_update
from .relays import RelayBank, RelayConfig, TripEvent, relay_step
from .scc import LoadInputMode, SafetyLimits, SccConfig, eval_barriers, scc_step

SETTLING_BAND = 1e-3


class ConfigError(ValueError):
    pass


class SimulationError(RuntimeError):
    pass


class OnTrip(str, Enum):
    HALT = "halt"
    CONTINUE = "continue"


@dataclass(frozen=True)
class EstimatorSettings:
    """Kalman settings as they appear in a config file.

    Covariances are isotropic/diagonal: ``process_noise`` scales I5,
    ``measurement_noise`` is the diagonal of the 2x2 measurement covariance.
    ``noise_std`` injects white noise on the two measurements.
    """

    use_true_state: bool = False
    process_noise: float = 1e-8
    measurement_noise: Tuple[float, float] = (1e-8, 1e-8)
    initial_state: Tuple[float, ...] = (0.0,) * N_STATES
    initial_cov: float = 1e-6
    noise_std: Tuple[float, float] = (0.0, 0.0)

    def kalman_config(self, dt):
        return KalmanConfig(
            process_noise_cov=self.process_noise * np.eye(N_STATES),
            measurement_noise_cov=np.diag(self.measurement_noise),
            initial_state=np.array(self.initial_state, dtype=float),
            initial_cov=self.initial_cov * np.eye(N_STATES),
            dt=dt,
        )


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float
    dt: float = 1e-3
    seed: int = 0
    on_trip: OnTrip = OnTrip.CONTINUE
    initial_state: Tuple[float, ...] = (0.0,) * N_STATES
    params: SystemParams = field(default_factory=SystemParams)
    limits: SafetyLimits = field(default_factory=SafetyLimits)
    relays: RelayConfig = field(default_factory=RelayConfig)
    scc_enabled: bool = True
    scc: SccConfig = field(default_factory=SccConfig)
    estimator: EstimatorSettings = field(default_factory=EstimatorSettings)
    attack: AttackSpec = field(default_factory=AttackSpec)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)

    def __post_init__(self):
        object.__setattr__(self, "on_trip", OnTrip(self.on_trip))
        if not self.duration > 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if not 0 < self.dt <= 0.01:
            raise ValueError(f"dt must lie in (0, 0.01], got {self.dt}")
        ratio = self.scc.t_s / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError(f"scc t_s={self.scc.t_s} is not a multiple of dt={self.dt}")
        if len(self.initial_state) != N_STATES:
            raise ValueError("initial_state needs 5 entries")

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    def with_(self, **changes):
        """Copy with top-level or dotted (``scc.alpha``) fields replaced."""
        top = {}
        nested = {}
        for key, val in changes.items():
            if "." in key:
                sec, name = key.split(".", 1)
                nested.setdefault(sec, {})[name] = val
            else:
                top[key] = val
        for sec, vals in nested.items():
            top[sec] = dataclasses.replace(top.get(sec, getattr(self, sec)), **vals)
        return dataclasses.replace(self, **top)


# --------------------------------------------------------------------------
# config files

_SECTIONS = {
    "params": SystemParams,
    "limits": SafetyLimits,
    "relays": RelayConfig,
    "scc": SccConfig,
    "estimator": EstimatorSettings,
    "attack": AttackSpec,
    "disturbance": DisturbanceSpec,
}
_TOP_SCALARS = ("duration", "dt", "seed", "on_trip", "initial_state")


def _plain(node):
    if isinstance(node, yaml.MappingNode):
        return {k.value: (_plain(v), v.start_mark.line + 1) for k, v in node.value}
    if isinstance(node, yaml.SequenceNode):
        return [_plain(v)[0] if isinstance(v, yaml.MappingNode) else _plain(v) for v in node.value]
    return yaml.safe_load(yaml.serialize(node)) if node is not None else None


def _coerce(value, target, where):
    try:
        if target is bool:
            if isinstance(value, bool):
                return value
            raise TypeError("expected true/false")
        if target is int:
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError("expected an integer")
            return int(value)
        if target is float:
            if isinstance(value, bool):
                raise TypeError("expected a number")
            return float(value)
        if target is str:
            return str(value)
        if target == "floats":
            return tuple(float(v) for v in value)
        if target == "pairs":
            return tuple((float(a), float(b)) for a, b in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: cannot read {value!r} ({exc})") from None
    raise AssertionError(target)


def _field_kind(f):
    default = f.default
    if f.name == "load_steps":
        return "pairs"
    if isinstance(default, bool):
        return bool
    if isinstance(default, Enum):
        return str
    if isinstance(default, tuple):
        return "floats"
    return float


def _build_section(cls, raw, section, path):
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: section '{section}' must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, (value, line) in raw.items():
        where = f"{path}:{line}: field '{section}.{key}'"
        if key not in known:
            raise ConfigError(f"{where}: unknown key")
        kwargs[key] = _coerce(value, _field_kind(known[key]), where)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        first = min((ln for _, ln in raw.values()), default=0)
        raise ConfigError(f"{path}:{first}: section '{section}': {exc}") from None


def parse_config(text: str, path="<string>") -> ScenarioConfig:
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 0
        raise ConfigError(f"{path}:{line}: YAML syntax error: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(root, yaml.MappingNode):
        raise ConfigError(f"{path}:1: top level must be a mapping")
    raw = _plain(root)
    kwargs = {}
    for key, (value, line) in raw.items():
        where = f"{path}:{line}: field '{key}'"
        if key in _SECTIONS:
            kwargs[key] = _build_section(_SECTIONS[key], value, key, path)
        elif key == "scc_enabled":
            kwargs[key] = _coerce(value, bool, where)
        elif key in _TOP_SCALARS:
            kind = {"duration": float, "dt": float, "seed": int, "on_trip": str,
                    "initial_state": "floats"}[key]
            kwargs[key] = _coerce(value, kind, where)
        else:
            raise ConfigError(f"{where}: unknown key")
    if "duration" not in kwargs:
        raise ConfigError(f"{path}: missing required field 'duration'")
    try:
        return ScenarioConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


def _section_dict(obj):
    out = {}
    for f in dataclasses.fields(obj):
        v = getattr(obj, f.name)
        if isinstance(v, Enum):
            v = v.value
        elif isinstance(v, tuple):
            v = [list(e) if isinstance(e, tuple) else e for e in v]
        out[f.name] = v
    return out


def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = {
        "duration": cfg.duration,
        "dt": cfg.dt,
        "seed": cfg.seed,
        "on_trip": cfg.on_trip.value,
        "initial_state": list(cfg.initial_state),
        "scc_enabled": cfg.scc_enabled,
    }
    for name in _SECTIONS:
        d[name] = _section_dict(getattr(cfg, name))
    return d


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)


# --------------------------------------------------------------------------
# simulation

@dataclass(frozen=True)
class TraceRecord:
    t: float
    x: Tuple[float, ...]
    x_hat: Tuple[float, ...]
    dp_c_legit: float
    dp_c_attacked: float
    dp_c_star: float
    dp_l: float
    h_omega: float
    h_nu: float
    scc_modified: bool
    alarm: bool
    relay_states: str
    trip_events: Tuple[TripEvent, ...] = ()


@dataclass
class RunSummary:
    max_abs_d_omega_hat: float
    max_abs_omega_dot_hat: float
    trip_events: List[TripEvent]
    scc_active_time: float
    scc_activation_intervals: List[Tuple[float, float]]
    alarm_count: int
    settling_time: Optional[float]

    @property
    def tripped(self):
        return bool(self.trip_events)

    def to_dict(self):
        return {
            "max_abs_d_omega_hat": self.max_abs_d_omega_hat,
            "max_abs_omega_dot_hat": self.max_abs_omega_dot_hat,
            "trip_events": [dataclasses.asdict(e) for e in self.trip_events],
            "scc_active_time": self.scc_active_time,
            "scc_activation_intervals": [list(iv) for iv in self.scc_activation_intervals],
            "alarm_count": self.alarm_count,
            "settling_time": self.settling_time,
        }


def summarize(trace: List[TraceRecord], dt: float) -> RunSummary:
    """Derive the run summary from a trace (and nothing else)."""
    max_w = max((abs(r.x[IDX_D_OMEGA_HAT]) for r in trace), default=0.0)
    max_r = max((abs(r.x[IDX_OMEGA_DOT_HAT]) for r in trace), default=0.0)
    events = [e for r in trace for e in r.trip_events]

    intervals = []
    start = None
    n_mod = 0
    for r in trace:
        if r.scc_modified:
            n_mod += 1
            if start is None:
                start = r.t
            last = r.t
        elif start is not None:
            intervals.append((start, last + dt))
            start = None
    if start is not None:
        intervals.append((start, last + dt))

    settling = None
    for r in reversed(trace):
        if abs(r.x[IDX_D_OMEGA_HAT]) >= SETTLING_BAND:
            break
        settling = r.t
    return RunSummary(
        max_abs_d_omega_hat=float(max_w),
        max_abs_omega_dot_hat=float(max_r),
        trip_events=events,
        scc_active_time=n_mod * dt,
        scc_activation_intervals=intervals,
        alarm_count=sum(1 for r in trace if r.alarm),
        settling_time=settling,
    )


def run(config: ScenarioConfig):
    """Simulate a scenario; returns ``(trace, summary)``."""
    cfg = config
    dt = cfg.dt
    model = build_continuous_model(cfg.params)
    dm_scc = discretize(model, cfg.scc.t_s)
    kcfg = cfg.estimator.kalman_config(dt)
    dm_kf = discretize(model, dt)
    phi, gamma = rk4_propagator(model, dt)
    rng = np.random.default_rng(cfg.seed)
    noise_std = np.array(cfg.estimator.noise_std, dtype=float)
    noisy = bool(np.any(noise_std > 0))
    use_truth = cfg.estimator.use_true_state

    # load deviation per step, piecewise constant
    n = cfg.n_steps
    times = np.arange(n) * dt
    loads = np.zeros(n)
    for t_step, delta in cfg.disturbance.load_steps:
        loads[times >= t_step - 1e-12] += delta

    x = np.array(cfg.initial_state, dtype=float)
    integ = 0.0
    est = EstimatorState.from_config(kcfg)
    tracker = SteadyStateTracker()
    bank = RelayBank()
    u_prev = None
    trace = []
    for k in range(n):
        t = k * dt
        dp_l = float(loads[k])
        z = x[3:5].copy()
        if noisy:
            z += noise_std * rng.standard_normal(2)

        dp_c_legit, integ = local_controller_step(cfg.params, z[0], integ, dt)
        dp_c_att = attack_signal(cfg.attack, t, dp_c_legit)

        if u_prev is None:
            est = kf_update(est, kcfg, z)
        elif tracker.frozen:
            est = tracker.step(est, dm_kf, u_prev, z)
        else:
            est = kf_step(est, kcfg, dm_kf, u_prev, z)
            tracker.observe(est, kcfg, dm_kf)
        x_scc = x if use_truth else est.x_hat

        if cfg.scc_enabled:
            res, ev = scc_step(dm_scc, model, cfg.limits, cfg.scc, x_scc, dp_c_att, dp_l)
            dp_c_star = res.dp_c_star
            modified = res.modified
            alarm = res.alarm
        else:
            dp_l_pred = dp_l if cfg.scc.load_input_mode is LoadInputMode.MEASURED else 0.0
            ev = eval_barriers(dm_scc, cfg.limits, x_scc, (dp_c_att, dp_l_pred), cfg.scc)
            dp_c_star = dp_c_att
            modified = alarm = False

        bank, events = relay_step(bank, cfg.relays, 1.0 + z[0], z[1], dt, t)
        trace.append(TraceRecord(
            t=t,
            x=tuple(x.tolist()),
            x_hat=tuple(est.x_hat.tolist()),
            dp_c_legit=dp_c_legit,
            dp_c_attacked=dp_c_att,
            dp_c_star=dp_c_star,
            dp_l=dp_l,
            h_omega=ev.h_omega,
            h_nu=ev.h_nu,
            scc_modified=modified,
            alarm=alarm,
            relay_states=bank.encode(),
            trip_events=tuple(events),
        ))
        if events and cfg.on_trip is OnTrip.HALT:
            break

        u_prev = np.array([dp_c_star, dp_l])
        x = phi @ x + gamma @ u_prev
        if not np.all(np.isfinite(x)):
            raise SimulationError(f"non-finite plant state after record {k} (t={t:.6g})")
    return trace, summarize(trace, dt)


# --------------------------------------------------------------------------
# traces

TRACE_COLUMNS = (
    "t",
    "dp_g", "dp_m", "d_omega", "d_omega_hat", "omega_dot_hat",
    "est_dp_g", "est_dp_m", "est_d_omega", "est_d_omega_hat", "est_omega_dot_hat",
    "dp_c_legit", "dp_c_attacked", "dp_c_star", "dp_l",
    "h_omega", "h_nu",
    "scc_modified", "alarm", "relay_states", "trip_events",
)


def _fmt(v):
    return format(v, ".9g")


def trace_rows(trace):
    for r in trace:
        yield (
            [_fmt(r.t)]
            + [_fmt(v) for v in r.x]
            + [_fmt(v) for v in r.x_hat]
            + [_fmt(r.dp_c_legit), _fmt(r.dp_c_attacked), _fmt(r.dp_c_star), _fmt(r.dp_l),
               _fmt(r.h_omega), _fmt(r.h_nu),
               str(int(r.scc_modified)), str(int(r.alarm)), r.relay_states,
               ";".join(str(e) for e in r.trip_events)]
        )


def write_trace(trace, path):
    """Write the trace as CSV (fixed header, 9 significant digits, LF newlines)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        w.writerows(trace_rows(trace))


def read_trace(path) -> dict:
    """Read a trace CSV into a dict of numpy columns (strings for the last two)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header) != TRACE_COLUMNS:
        raise ValueError(f"{path}: unexpected trace header")
    cols = {}
    for i, name in enumerate(header):
        vals = [row[i] for row in body]
        if name in ("relay_states", "trip_events"):
            cols[name] = vals
        else:
            cols[name] = np.array([float(v) for v in vals])
    return cols


# --------------------------------------------------------------------------
# attack calibration

@dataclass
class CalibrationResult:
    frequency: float
    amplitude: float
    element: str
    history: List[Tuple[float, bool]]


def _trips(cfg, element, within):
    trace, summary = run(cfg)
    return any(e.element == element and e.t <= within for e in summary.trip_events)


def calibrate_attack(config: ScenarioConfig, element: str = "ROCOF", within: float = 30.0,
                     start: float = 0.02, growth: float = 1.25, refine: int = 10,
                     max_amplitude: float = 50.0) -> CalibrationResult:
    """Smallest attack amplitude that trips ``element`` with the SCC disabled.

    Sinusoids are tuned to the plant's resonant frequency first.  The
    amplitude grows geometrically until the no-SCC run trips within
    ``within`` seconds, then the bracket is bisected ``refine`` times.
    """
    attack = config.attack
    if attack.kind is AttackKind.NONE:
        raise ValueError("calibration needs an attack kind other than 'none'")
    if attack.kind is AttackKind.SINUSOID:
        f = resonant_frequency(build_continuous_model(config.params))
        attack = dataclasses.replace(attack, frequency=f)
    base = config.with_(scc_enabled=False, duration=min(config.duration, within + config.dt),
                        on_trip=OnTrip.HALT, attack=attack)

    history = []
    lo, hi = 0.0, None
    amp = start
    while amp <= max_amplitude:
        hit = _trips(base.with_(**{"attack.amplitude": amp}), element, within)
        history.append((amp, hit))
        if hit:
            hi = amp
            break
        lo = amp
        amp *= growth
    if hi is None:
        raise RuntimeError(f"no amplitude up to {max_amplitude} trips {element}")
    for _ in range(refine):
        mid = 0.5 * (lo + hi)
        hit = _trips(base.with_(**{"attack.amplitude": mid}), element, within)
        history.append((mid, hit))
        if hit:
            hi = mid
        else:
            lo = mid
    return CalibrationResult(attack.frequency, hi, element, history)
