"""False-data injection on the governor control signal, plus load steps."""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import bisect
import math

import numpy as np

from .dynamics import ContinuousModel


class AttackKind(str, Enum):
    NONE = "none"
    SINUSOID = "sinusoid"
    BIAS = "bias"
    RAMP = "ramp"


class AttackMode(str, Enum):
    REPLACE = "replace"
    ADD = "add"


class NoOscillatoryModeError(ValueError):
    pass


@dataclass(frozen=True)
class AttackSpec:
    """Corruption applied to dP_c on [t_start, t_end).

    ``replace`` overwrites the legitimate signal (man in the middle);
    ``add`` superimposes on it.  A ramp rises linearly from 0 at t_start
    to ``amplitude`` at t_end.
    """

    kind: AttackKind = AttackKind.NONE
    amplitude: float = 0.0
    frequency: float = 0.0
    phase: float = 0.0
    t_start: float = 0.0
    t_end: float = math.inf
    mode: AttackMode = AttackMode.REPLACE

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        object.__setattr__(self, "mode", AttackMode(self.mode))
        if not self.t_start < self.t_end:
            raise ValueError(f"attack window empty: t_start={self.t_start}, t_end={self.t_end}")
        if self.amplitude < 0:
            raise ValueError(f"attack amplitude must be >= 0, got {self.amplitude}")
        if self.kind is AttackKind.SINUSOID and not self.frequency > 0:
            raise ValueError("sinusoid attack needs frequency > 0")
        if self.kind is AttackKind.RAMP and not math.isfinite(self.t_end):
            raise ValueError("ramp attack needs a finite t_end")


@dataclass(frozen=True)
class DisturbanceSpec:
    """Cumulative load steps: at each time the load deviation jumps by delta."""

    load_steps: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        steps = tuple((float(t), float(d)) for t, d in self.load_steps)
        times = [t for t, _ in steps]
        if times != sorted(times):
            raise ValueError("load step times must be non-decreasing")
        object.__setattr__(self, "load_steps", steps)

    def load_at(self, t: float) -> float:
        times = [s[0] for s in self.load_steps]
        n = bisect.bisect_right(times, t)
        return float(sum(d for _, d in self.load_steps[:n]))


def attack_signal(spec: AttackSpec, t: float, dp_c_legit: float) -> float:
    if spec.kind is AttackKind.NONE or not spec.t_start <= t < spec.t_end:
        return dp_c_legit
    if spec.kind is AttackKind.SINUSOID:
        v = spec.amplitude * math.sin(2 * math.pi * spec.frequency * t + spec.phase)
    elif spec.kind is AttackKind.BIAS:
        v = spec.amplitude
    else:
        v = spec.amplitude * (t - spec.t_start) / (spec.t_end - spec.t_start)
    if spec.mode is AttackMode.ADD:
        return dp_c_legit + v
    return v


def resonant_frequency(model: ContinuousModel, imag_tol: float = 1e-9) -> float:
    """Frequency (Hz) of the least-damped oscillatory mode of A.

    Least damped means smallest damping ratio -Re(l)/|l|; this is the
    sinusoid an attacker would pick to drive the largest ROCOF swing.
    """
    lam = np.linalg.eigvals(model.a)
    osc = lam[np.abs(lam.imag) > imag_tol]
    if osc.size == 0:
        raise NoOscillatoryModeError(
            "state matrix has no complex eigenvalue pair; choose the attack frequency manually"
        )
    zeta = -osc.real / np.abs(osc)
    best = osc[np.argmin(zeta)]
    return float(abs(best.imag) / (2 * math.pi))
