"""Constant-envelope phase quantization and its polygonal relaxation.

The transmitter is restricted to the set of Q equally spaced phases at fixed
amplitude sqrt(P_tx / N) per antenna.  The convex hull of that set is a regular
Q-gon whose vertices are exactly the transmit points; relaxing each antenna
signal to the Q-gon turns margin maximization into a linear program.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidOrder

TWO_PI = 2.0 * np.pi


def _check_order(q, minimum):
    if not isinstance(q, (int, np.integer)) or q < minimum or (q & (q - 1)) != 0:
        raise InvalidOrder(f"order must be a power of two >= {minimum}, got {q!r}")


def phase_quantize(phi, q):
    """Quantize phases to the midpoints of q uniform sectors of [0, 2*pi).

    The sector of phi is floor(phi / (2*pi/q)); a phase exactly on a sector
    boundary therefore falls into the higher sector, which keeps the map
    deterministic.  Output phases lie in (0, 2*pi).

    >>> float(phase_quantize(np.pi, 4))  # sector 2 of 4 -> midpoint 5*pi/4
    3.9269908169872414
    """
    _check_order(q, 2)
    phi = np.asarray(phi, dtype=float)
    step = TWO_PI / q
    sector = np.floor((phi % TWO_PI) / step).astype(np.int64) % q
    return (sector + 0.5) * step


def ce_quantize(x, q, ptx=None, n=None):
    """Project x entrywise onto the constant-envelope alphabet.

    Each entry becomes sqrt(ptx / n) * exp(j * phase_quantize(arg x, q)); the
    argument of a zero entry is taken as 0, so zeros map into the first sector.
    `n` defaults to the trailing dimension of x and `ptx` defaults to n
    (unit amplitude).
    """
    x = np.asarray(x, dtype=complex)
    if n is None:
        n = x.shape[-1] if x.ndim else 1
    if ptx is None:
        ptx = float(n)
    amplitude = np.sqrt(ptx / n)
    return amplitude * np.exp(1j * phase_quantize(np.angle(x), q))


def ce_alphabet(q, ptx=None, n=1):
    """The q transmit points sqrt(ptx/n) * exp(j*(2i-1)*pi/q), i = 1..q."""
    _check_order(q, 2)
    if ptx is None:
        ptx = float(n)
    i = np.arange(1, q + 1)
    return np.sqrt(ptx / n) * np.exp(1j * (2 * i - 1) * np.pi / q)


@dataclass(frozen=True)
class PolygonSpec:
    """Linear description of the per-antenna Q-gon over stacked [Re; Im].

    The polygon is { x' : E x' <= bound, |x'_k| <= bound } with
    bound = cos(pi/Q).  E holds +/-T_i for i = 2..Q/4 where T_i rotates every
    antenna's (Re, Im) pair by beta_i = 2*pi*(i-1)/Q; the i = 1 block is the
    coordinate box and is carried as variable bounds instead of rows.
    """

    order: int
    n: int
    bound: float
    E: np.ndarray  # (n*(order-4), 2n)


def polygon_spec(q, n):
    """Rows-and-bound description of the Q-gon relaxation for n antennas."""
    _check_order(q, 4)
    eye = np.eye(n)
    blocks = []
    for i in range(2, q // 4 + 1):
        beta = TWO_PI * (i - 1) / q
        rot = np.block([
            [np.cos(beta) * eye, np.sin(beta) * eye],
            [-np.sin(beta) * eye, np.cos(beta) * eye],
        ])
        blocks.append(rot)
        blocks.append(-rot)
    E = np.vstack(blocks) if blocks else np.zeros((0, 2 * n))
    return PolygonSpec(order=q, n=n, bound=float(np.cos(np.pi / q)), E=E)


def polygon_contains(x, q, tol=1e-9):
    """Whether every entry of x lies in the Q-gon (circumradius 1).

    Uses the support function of the polygon: membership is
    max_k Re{x * exp(-2j*pi*k/q)} <= cos(pi/q) over all q facet normals,
    which is the same set the stacked (E, bounds) rows describe.
    """
    _check_order(q, 4)
    x = np.asarray(x, dtype=complex)
    normals = np.exp(-1j * TWO_PI * np.arange(q) / q)
    proj = (x[..., None] * normals).real
    return bool(np.all(proj <= np.cos(np.pi / q) + tol))
