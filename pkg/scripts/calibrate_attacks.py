"""Search for the weakest attacks that trip each relay with the filter off.

    python3 scripts/calibrate_attacks.py

The sinusoid is pinned to the plant's least-damped mode and its amplitude
grown until the ROCOF element trips within 30 s; the bias attack is grown
until OF trips.  Shipped configs use a margin above these minima.
"""

import math
from pathlib import Path

from scc_lfc.attacks import AttackKind, AttackMode, AttackSpec
from scc_lfc.scenario import calibrate_attack, load_config

ROOT = Path(__file__).resolve().parent.parent


def main():
    base = load_config(ROOT / "configs" / "rocof_attack_noscc.yaml")
    sine = calibrate_attack(base, element="ROCOF", within=30.0)
    print(f"sinusoid @ {sine.frequency:.7g} Hz: min amplitude {sine.amplitude:.4f} pu trips ROCOF")

    bias = base.with_(attack=AttackSpec(kind=AttackKind.BIAS, amplitude=0.0, t_start=1.0,
                                        t_end=math.inf, mode=AttackMode.ADD))
    res = calibrate_attack(bias, element="OF", within=30.0)
    print(f"bias (add mode): min amplitude {res.amplitude:.4f} pu trips OF")

    shipped = load_config(ROOT / "configs" / "rocof_attack_scc20.yaml").attack.amplitude
    weak = load_config(ROOT / "configs" / "rocof_attack_weak.yaml").attack.amplitude
    print(f"shipped strong sinusoid {shipped} pu ({shipped / sine.amplitude:.2f}x minimum), "
          f"weak {weak} pu ({weak / sine.amplitude:.2f}x)")


if __name__ == "__main__":
    main()
