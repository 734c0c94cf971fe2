"""Brute-force reference computations backing the self-test harness.

Everything here re-derives a result by exhaustive enumeration or by the raw
row description, independently of the fast paths it is used to check.
"""

import itertools

import numpy as np

from .constellation import safety_margin
from .quantize import ce_alphabet, polygon_spec


def brute_force_lp(c, A, b, senses, lower, upper, feas_tol=1e-7):
    """Maximize c'x over {A x <=/>= b, l <= x <= u} by vertex enumeration.

    All bounds must be finite (bounded polytope), so every feasible problem
    attains its maximum at a vertex, and each vertex is the solution of some
    n active constraints out of the stacked system.  Returns
    (status, value, x) with status 'optimal' or 'infeasible'.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ValueError("vertex enumeration needs finite bounds")
    n = c.size
    sgn = np.where(np.asarray(senses) == "<=", 1.0, -1.0)
    G = np.vstack([A * sgn[:, None], np.eye(n), -np.eye(n)])
    h = np.concatenate([b * sgn, upper, -lower])

    combos = np.array(list(itertools.combinations(range(G.shape[0]), n)))
    mats = G[combos]
    keep = np.abs(np.linalg.det(mats)) > 1e-10
    if not keep.any():
        return "infeasible", None, None
    verts = np.linalg.solve(mats[keep], h[combos[keep]][..., None])[..., 0]
    feas = np.all(G @ verts.T <= h[:, None] + feas_tol, axis=0)
    if not feas.any():
        return "infeasible", None, None
    vals = verts[feas] @ c
    k = int(np.argmax(vals))
    return "optimal", float(vals[k]), verts[feas][k]


def best_discrete_margin(H, s_idx, c, q):
    """Exhaustive maximin margin over all constant-envelope transmit vectors.

    Enumerates the full q^N alphabet at unit amplitude (P_tx = N) and returns
    (best margin, best vector).  Only sized for small N.
    """
    H = np.asarray(H, dtype=complex)
    n = H.shape[1]
    if q ** n > 2_000_000:
        raise ValueError(f"{q}^{n} vectors is too many to enumerate")
    alphabet = ce_alphabet(q)
    grid = np.array(list(itertools.product(range(q), repeat=n)))
    T = alphabet[grid]
    Y = T @ H.T
    margins = safety_margin(Y, np.asarray(s_idx)[None, :], c).min(axis=1)
    k = int(np.argmax(margins))
    return float(margins[k]), T[k]


def polygon_contains_rows(x, q, tol=1e-9):
    """Q-gon membership via the stacked row description (E rows plus box)."""
    x = np.asarray(x, dtype=complex).ravel()
    spec = polygon_spec(q, x.size)
    v = np.concatenate([x.real, x.imag])
    if np.any(np.abs(v) > spec.bound + tol):
        return False
    if spec.E.size and np.any(spec.E @ v > spec.bound + tol):
        return False
    return True
