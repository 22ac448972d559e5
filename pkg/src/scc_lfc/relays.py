"""Definite-time over/under-frequency and ROCOF protection elements.

Thresholds default to the IEEE 1547 Category III OF2/UF2 settings.  The
ROCOF element has no clearing time in that table; ``rocof_pickup`` fills
the gap and defaults to 50 ms so that single-step spikes do not trip.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

# absorbs float round-off when elapsed time is a sum of steps
_TIME_EPS = 1e-9


class RelayStatus(str, Enum):
    MONITORING = "M"
    PICKED_UP = "P"
    TRIPPED = "T"


ELEMENTS = ("OF", "UF", "ROCOF")


@dataclass(frozen=True)
class RelayConfig:
    of_threshold: float = 1.03
    uf_threshold: float = 0.942
    of_clearing: float = 0.160
    uf_clearing: float = 0.160
    rocof_threshold: float = 0.05
    rocof_pickup: float = 0.050

    def __post_init__(self):
        for name in ("of_threshold", "uf_threshold", "of_clearing", "uf_clearing",
                     "rocof_threshold", "rocof_pickup"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.of_threshold > 1.0 > self.uf_threshold:
            raise ValueError("need of_threshold > 1 > uf_threshold")

    def delay(self, element):
        return {"OF": self.of_clearing, "UF": self.uf_clearing, "ROCOF": self.rocof_pickup}[element]


@dataclass(frozen=True)
class ElementState:
    status: RelayStatus = RelayStatus.MONITORING
    onset: Optional[float] = None
    trip_time: Optional[float] = None

    def elapsed(self, t):
        return 0.0 if self.onset is None else t - self.onset


@dataclass(frozen=True)
class TripEvent:
    element: str
    t: float
    value: float

    def __str__(self):
        return f"{self.element}@{self.t:.9g}"


@dataclass(frozen=True)
class RelayBank:
    of: ElementState = field(default_factory=ElementState)
    uf: ElementState = field(default_factory=ElementState)
    rocof: ElementState = field(default_factory=ElementState)

    def element(self, name) -> ElementState:
        return getattr(self, name.lower())

    @property
    def tripped(self) -> bool:
        return any(self.element(n).status is RelayStatus.TRIPPED for n in ELEMENTS)

    @property
    def quiet(self) -> bool:
        return (self.of.status is RelayStatus.MONITORING and self.uf.status is RelayStatus.MONITORING
                and self.rocof.status is RelayStatus.MONITORING)

    def encode(self) -> str:
        """Compact per-element status, e.g. ``MMP`` for (OF, UF, ROCOF)."""
        return "".join(self.element(n).status.value for n in ELEMENTS)


def _advance(state: ElementState, active: bool, delay: float, t: float) -> ElementState:
    if state.status is RelayStatus.TRIPPED:
        return state
    if not active:
        if state.status is RelayStatus.MONITORING:
            return state
        return ElementState()
    onset = t if state.onset is None else state.onset
    if t - onset >= delay - _TIME_EPS:
        return ElementState(RelayStatus.TRIPPED, onset, t)
    return ElementState(RelayStatus.PICKED_UP, onset, None)


def relay_step(bank: RelayBank, cfg: RelayConfig, omega_hat: float, omega_dot_hat: float,
               dt: float, t: float) -> Tuple[RelayBank, List[TripEvent]]:
    """Advance all three elements to time ``t``.

    ``omega_hat`` is the absolute measured frequency in pu (1 + deviation).
    A condition that first becomes true at t0 and stays true trips at the
    first sample with t - t0 >= delay.
    """
    if not dt > 0:
        raise ValueError(f"relay step must be > 0, got {dt}")
    if (cfg.uf_threshold < omega_hat < cfg.of_threshold
            and abs(omega_dot_hat) < cfg.rocof_threshold and bank.quiet):
        return bank, []
    conditions = {
        "OF": omega_hat >= cfg.of_threshold,
        "UF": omega_hat <= cfg.uf_threshold,
        "ROCOF": abs(omega_dot_hat) >= cfg.rocof_threshold,
    }
    values = {"OF": omega_hat, "UF": omega_hat, "ROCOF": omega_dot_hat}
    new = {}
    events = []
    for name in ELEMENTS:
        old = bank.element(name)
        st = _advance(old, conditions[name], cfg.delay(name), t)
        if st.status is RelayStatus.TRIPPED and old.status is not RelayStatus.TRIPPED:
            events.append(TripEvent(name, t, float(values[name])))
        new[name.lower()] = st
    return RelayBank(**new), events
