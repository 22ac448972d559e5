"""Static figures from trace CSVs: control signal on top, frequency and ROCOF below."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .relays import RelayConfig  # noqa: E402
from .scenario import read_trace  # noqa: E402


def plot_trace(path, out_dir=None, relays: RelayConfig = RelayConfig(), fmt="png"):
    """Write ``<stem>_control``, ``<stem>_rocof`` and ``<stem>_frequency`` images.

    Returns the list of written paths.
    """
    path = Path(path)
    out_dir = Path(out_dir) if out_dir else path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    cols = read_trace(path)
    t = cols["t"]

    written = []

    fig, (ax_u, ax_r) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ax_u.plot(t, cols["dp_c_attacked"], color="tab:blue", lw=1, label="received $\\Delta P_c$")
    ax_u.plot(t, cols["dp_c_star"], color="tab:orange", lw=1, label="applied $\\Delta P_c^*$")
    ax_u.set_ylabel("control (pu)")
    ax_u.legend(loc="upper right", fontsize=8)
    ax_r.plot(t, cols["omega_dot_hat"], color="tab:blue", lw=1)
    for sign in (1, -1):
        ax_r.axhline(sign * relays.rocof_threshold, color="k", ls="--", lw=0.8)
    top = 1.15 * max(abs(cols["omega_dot_hat"]).max(), relays.rocof_threshold)
    ax_r.set_ylim(-top, top)
    ax_r.set_ylabel("ROCOF (pu/s)")
    ax_r.set_xlabel("time (s)")
    fig.tight_layout()
    p = out_dir / f"{path.stem}_rocof.{fmt}"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)

    fig, (ax_u, ax_f) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    ax_u.plot(t, cols["dp_c_attacked"], color="tab:blue", lw=1, label="received $\\Delta P_c$")
    ax_u.plot(t, cols["dp_c_star"], color="tab:orange", lw=1, label="applied $\\Delta P_c^*$")
    ax_u.plot(t, cols["dp_m"], color="tab:green", lw=1, label="$\\Delta P_m$")
    ax_u.set_ylabel("power (pu)")
    ax_u.legend(loc="upper right", fontsize=8)
    ax_f.plot(t, 1.0 + cols["d_omega_hat"], color="tab:blue", lw=1)
    ax_f.axhline(relays.of_threshold, color="k", ls="--", lw=0.8)
    ax_f.axhline(relays.uf_threshold, color="k", ls="--", lw=0.8)
    ax_f.set_ylabel("frequency (pu)")
    ax_f.set_xlabel("time (s)")
    fig.tight_layout()
    p = out_dir / f"{path.stem}_frequency.{fmt}"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)

    fig, ax = plt.subplots(figsize=(7, 2.5))
    ax.plot(t, cols["dp_c_legit"], lw=1, label="legitimate")
    ax.plot(t, cols["dp_c_attacked"], lw=1, label="received")
    ax.plot(t, cols["dp_c_star"], lw=1, label="applied")
    ax.fill_between(t, 0, 1, where=cols["alarm"] > 0, transform=ax.get_xaxis_transform(),
                    color="tab:red", alpha=0.1, label="alarm")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("$\\Delta P_c$ (pu)")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    p = out_dir / f"{path.stem}_control.{fmt}"
    fig.savefig(p, dpi=120)
    plt.close(fig)
    written.append(p)
    return written
