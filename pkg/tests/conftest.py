import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from scc_lfc.dynamics import SystemParams, build_continuous_model, discretize  # noqa: E402

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="session")
def params():
    return SystemParams()


@pytest.fixture(scope="session")
def model(params):
    return build_continuous_model(params)


@pytest.fixture(scope="session")
def dm(model):
    return discretize(model, 0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_RUNS = {}


def shipped_run(name, **overrides):
    """Run a shipped config (with optional overrides) once per session."""
    from scc_lfc.scenario import load_config, run

    key = (name, tuple(sorted(overrides.items())))
    if key not in _RUNS:
        cfg = load_config(CONFIG_DIR / f"{name}.yaml")
        if overrides:
            cfg = cfg.with_(**overrides)
        _RUNS[key] = run(cfg)
    return _RUNS[key]
