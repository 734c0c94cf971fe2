"""Constellations, Gray bit maps, detection, and decision-region geometry.

PSK points sit at exp(j*(2i+1)*pi/S) so that decision sectors are bounded by
the axes-aligned grid of S rays; QAM points form the odd-integer grid
{+/-1, +/-3, ...}^2 with nearest-neighbor slicing per axis.  Labels are Gray
codes, per ring for PSK and per axis (I bits then Q bits) for QAM.
"""

from dataclasses import dataclass
from math import isqrt

import numpy as np

from .exceptions import InvalidOrder, LengthMismatch

TWO_PI = 2.0 * np.pi


def _gray(i):
    return i ^ (i >> 1)


def _check_power_of_two(order, minimum, what):
    if not isinstance(order, (int, np.integer)) or order < minimum or (order & (order - 1)) != 0:
        raise InvalidOrder(f"{what} order must be a power of two >= {minimum}, got {order!r}")


@dataclass(frozen=True)
class Constellation:
    """An indexed symbol alphabet with Gray bit labels.

    points[i] is the complex symbol at canonical index i and labels[i] its
    integer bit label; `max_coord` is the largest per-axis coordinate for QAM
    grids and None for PSK rings.
    """

    kind: str
    order: int
    points: np.ndarray
    labels: np.ndarray
    bits_per_symbol: int
    max_coord: int | None = None

    @property
    def avg_power(self):
        """Mean squared symbol magnitude E|s|^2 under uniform signaling."""
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def mean_abs_sum(self):
        """E[|Re s| + |Im s|] under uniform signaling (blind-gain target)."""
        return float(np.mean(np.abs(self.points.real) + np.abs(self.points.imag)))


def make_psk(order):
    """S-PSK with points exp(j*(2i+1)*pi/S) and a cyclic Gray labeling.

    >>> complex(make_psk(4).points[0])
    (0.7071067811865476+0.7071067811865475j)
    """
    _check_power_of_two(order, 2, "PSK")
    idx = np.arange(order)
    points = np.exp(1j * (2 * idx + 1) * np.pi / order)
    labels = np.array([_gray(int(i)) for i in idx])
    bits = int(np.log2(order))
    return Constellation("psk", int(order), points, labels, bits, None)


def make_qam(order):
    """Square QAM on the odd-integer grid with per-axis Gray labels.

    The index of a point is re_idx * L + im_idx with levels sorted ascending
    per axis (L = sqrt(order)); its label concatenates the Gray codes of the
    two axis indices, I bits first.
    """
    _check_power_of_two(order, 4, "QAM")
    side = isqrt(int(order))
    if side * side != order or (side & (side - 1)) != 0:
        raise InvalidOrder(f"QAM order must be an even power of two, got {order!r}")
    levels = 2 * np.arange(side) - (side - 1)
    re_idx, im_idx = np.divmod(np.arange(order), side)
    points = levels[re_idx] + 1j * levels[im_idx]
    axis_bits = int(np.log2(side))
    labels = np.array([(_gray(int(r)) << axis_bits) | _gray(int(q))
                       for r, q in zip(re_idx, im_idx)])
    return Constellation("qam", int(order), points, labels, 2 * axis_bits, int(side - 1))


_NAMED = {
    "bpsk": ("psk", 2),
    "qpsk": ("psk", 4),
    "8psk": ("psk", 8),
    "16psk": ("psk", 16),
    "4qam": ("qam", 4),
    "16qam": ("qam", 16),
    "64qam": ("qam", 64),
}


def named_constellation(name):
    """Constellation for a conventional name such as 'qpsk' or '16qam'."""
    try:
        kind, order = _NAMED[str(name).lower()]
    except KeyError:
        raise InvalidOrder(f"unknown constellation {name!r}; known: {sorted(_NAMED)}") from None
    return make_psk(order) if kind == "psk" else make_qam(order)


def detect(u, c):
    """Nearest-region detection; returns canonical symbol indices.

    PSK slices by phase sector (arg 0 is assigned to the first sector); QAM
    slices each axis at the even-integer thresholds with boundary values
    resolving to the lower cell.  Inputs broadcast; output has u's shape.
    """
    u = np.asarray(u, dtype=complex)
    if c.kind == "psk":
        step = TWO_PI / c.order
        return (np.floor((np.angle(u) % TWO_PI) / step).astype(np.int64) % c.order)
    side = c.max_coord + 1
    thresholds = 2 * np.arange(side - 1) - (side - 2)  # even ints between levels
    re_idx = np.searchsorted(thresholds, u.real, side="left")
    im_idx = np.searchsorted(thresholds, u.imag, side="left")
    return re_idx * side + im_idx


def bits_to_symbols(bits, c):
    """Pack a 0/1 stream (MSB first within each symbol) into symbol indices."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    width = c.bits_per_symbol
    if bits.size % width != 0:
        raise LengthMismatch(f"bit-stream length {bits.size} is not a multiple of {width}")
    weights = 1 << np.arange(width - 1, -1, -1)
    labels = bits.reshape(-1, width) @ weights
    inverse = np.empty(c.order, dtype=np.int64)
    inverse[c.labels] = np.arange(c.order)
    return inverse[labels]


def symbols_to_bits(indices, c):
    """Unpack symbol indices into their Gray bit labels (MSB first)."""
    indices = np.asarray(indices, dtype=np.int64).ravel()
    width = c.bits_per_symbol
    shifts = np.arange(width - 1, -1, -1)
    return ((c.labels[indices][:, None] >> shifts) & 1).ravel()


def psk_margin(y, s, theta):
    """Signed distance from y to the boundary of the PSK sector around s.

    With z = y * conj(s), the sector of half-angle theta gives
    margin = Re(z)*sin(theta) - |Im(z)|*cos(theta): positive inside, zero on
    the boundary, negative outside.
    """
    z = np.asarray(y, dtype=complex) * np.conj(np.asarray(s, dtype=complex))
    return z.real * np.sin(theta) - np.abs(z.imag) * np.cos(theta)


def _axis_margin(value, level, max_coord, alpha):
    lo = np.where(level == -max_coord, np.inf, value - alpha * (level - 1))
    hi = np.where(level == max_coord, np.inf, alpha * (level + 1) - value)
    return np.minimum(lo, hi)


def qam_margin(y, s, max_coord, alpha=1.0):
    """Signed distance from y to the slicing cell of grid point s scaled by alpha.

    The cell of per-axis level v spans [alpha*(v-1), alpha*(v+1)] with the
    outward side of edge levels unbounded; the margin is the minimum over the
    finite cell edges of both axes.
    """
    y = np.asarray(y, dtype=complex)
    s = np.asarray(s, dtype=complex)
    return np.minimum(_axis_margin(y.real, s.real, max_coord, alpha),
                      _axis_margin(y.imag, s.imag, max_coord, alpha))


def safety_margin(u, s, c, alpha=1.0):
    """Distance from received points u to the decision boundary of symbols s.

    s holds canonical indices into c.  For PSK the regions are scale-free
    sectors and alpha is ignored; for QAM the regions are the slicing cells of
    the grid scaled by alpha.  Positive inside the correct region, negative
    outside; detection of u is correct for any perturbation smaller than the
    margin.
    """
    pts = c.points[np.asarray(s, dtype=np.int64)]
    if c.kind == "psk":
        return psk_margin(u, pts, np.pi / c.order)
    return qam_margin(u, pts, c.max_coord, alpha)


@dataclass(frozen=True)
class SymbolRegionSpec:
    """Per-symbol constants of the linearized QAM decision regions.

    offset: o at alpha = 1, i.e. (Re s - sgn Re s) + j(Im s - sgn Im s);
    the true cell origin is alpha * offset.  c is the alpha-independent
    rotation constant o * (sgn Re s - j sgn Im s) / (sqrt(2) * alpha) and
    xi_re / xi_im are the cell widths toward the cap edges, 2 for interior
    levels and inf on the outward side of edge levels.
    """

    offset: np.ndarray
    c: np.ndarray
    xi_re: np.ndarray
    xi_im: np.ndarray


def qam_region_spec(s, max_coord):
    """Region constants for an array of QAM grid points."""
    s = np.asarray(s, dtype=complex)
    sr = np.sign(s.real)
    si = np.sign(s.imag)
    offset = (s.real - sr) + 1j * (s.imag - si)
    c = offset * (sr - 1j * si) / np.sqrt(2.0)
    xi_re = np.where(np.abs(s.real) >= max_coord, np.inf, 2.0)
    xi_im = np.where(np.abs(s.imag) >= max_coord, np.inf, 2.0)
    return SymbolRegionSpec(offset=offset, c=c, xi_re=xi_re, xi_im=xi_im)
