"""Independent reference computations used by the tests.

Nothing here imports the code under test beyond plain data containers.
"""

import math

import numpy as np
from scipy.integrate import solve_ivp

CANONICAL = dict(tau_g=0.2, tau_t=0.5, inertia_m=10.0, damping_d=0.8, droop_r=0.05,
                 tau_omega=0.1, tau_nu=0.2)


def canonical_ab(tau_g=0.2, tau_t=0.5, inertia_m=10.0, damping_d=0.8, droop_r=0.05,
                 tau_omega=0.1, tau_nu=0.2):
    """State matrices typed in entry by entry (negative droop feedback)."""
    tg, tt, m, d, r, tw, tn = tau_g, tau_t, inertia_m, damping_d, droop_r, tau_omega, tau_nu
    a = np.zeros((5, 5))
    a[0, 0] = -1 / tg
    a[0, 2] = -1 / (r * tg)
    a[1, 0] = 1 / tt
    a[1, 1] = -1 / tt
    a[2, 1] = 1 / m
    a[2, 2] = -d / m
    a[3, 2] = 1 / tw
    a[3, 3] = -1 / tw
    a[4, 1] = 1 / (m * tn)
    a[4, 2] = -d / (m * tn)
    a[4, 4] = -1 / tn
    b = np.zeros((5, 2))
    b[0, 0] = 1 / tg
    b[2, 1] = -1 / m
    b[4, 1] = -1 / (m * tn)
    return a, b


def taylor_expm(a, terms=30):
    """Scaled Taylor series with repeated squaring."""
    a = np.asarray(a, dtype=float)
    norm = np.abs(a).sum(axis=0).max()
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0.5 else 0
    x = a / 2**s
    out = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, terms + 1):
        term = term @ x / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def rk4_flow(a, b, t_end, dt):
    """Integrate X' = A X with X(0)=I and Y' = A Y + B, Y(0)=0 by fine RK4.

    Returns (Phi(t_end), Gamma(t_end)), i.e. the ZOH matrices.
    """
    n = a.shape[0]
    x = np.eye(n)
    y = np.zeros_like(b, dtype=float)
    steps = int(round(t_end / dt))
    for _ in range(steps):
        k1 = a @ x
        k2 = a @ (x + 0.5 * dt * k1)
        k3 = a @ (x + 0.5 * dt * k2)
        k4 = a @ (x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        l1 = a @ y + b
        l2 = a @ (y + 0.5 * dt * l1) + b
        l3 = a @ (y + 0.5 * dt * l2) + b
        l4 = a @ (y + dt * l3) + b
        y = y + dt / 6 * (l1 + 2 * l2 + 2 * l3 + l4)
    return x, y


def held_input_solution(a, b, x0, u, t_end):
    """High-accuracy adaptive integration of x' = Ax + Bu with u constant."""
    bu = b @ np.asarray(u, dtype=float)
    sol = solve_ivp(lambda t, x: a @ x + bu, (0.0, t_end), np.asarray(x0, dtype=float),
                    method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y[:, -1]


def central_gradient(f, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def grid_qp(ref, slopes, intercepts, lo=-5.0, hi=5.0, res=1e-4):
    """Brute-force min (u - ref)^2 over a grid subject to s_i u + c_i <= 0.

    If no grid point is feasible, returns the grid point with the smallest
    largest distance to any violated half-line.
    """
    u = np.linspace(lo, hi, int(round((hi - lo) / res)) + 1)
    vals = np.outer(u, slopes) + intercepts
    ok = np.all(vals <= 0, axis=1)
    if ok.any():
        cand = u[ok]
        return cand[np.argmin((cand - ref) ** 2)], True
    dist = np.where(vals > 0, vals / np.maximum(np.abs(slopes), 1e-300), 0.0).max(axis=1)
    return u[np.argmin(dist)], False
