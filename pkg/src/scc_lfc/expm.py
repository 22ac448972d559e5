"""Matrix exponential by scaling and squaring with a degree-13 Pade approximant.

Only the small dense matrices used by the discretizer go through here
(5x5 state matrix, 7x7 augmented matrix), so there is no attempt at the
lower-degree shortcuts or the backward-error bounds of the full algorithm.
"""

import numpy as np

# Pade(13) numerator coefficients, b_k = (26-k)! 13! / (26! (13-k)! k!)
_B13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)

# largest 1-norm for which Pade(13) is accurate to double precision
THETA_13 = 5.371920351148152


def _pade13(a):
    b = _B13
    ident = np.eye(a.shape[0])
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (
        a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
        + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident
    )
    v = (
        a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
        + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    )
    return u, v


def expm(a: np.ndarray) -> np.ndarray:
    """Return exp(a) for a real square matrix."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("expm input contains non-finite entries")
    norm = np.linalg.norm(a, 1)
    s = 0
    if norm > THETA_13:
        s = int(np.ceil(np.log2(norm / THETA_13)))
    u, v = _pade13(a / 2.0**s)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r
