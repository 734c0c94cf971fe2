"""Margin-maximizing constant-envelope precoders and the linear baselines.

The downlink signal is designed per symbol vector: relax every antenna to the
Q-gon hull of the transmit alphabet, maximize the smallest distance of the
noiseless receive points to their decision boundaries (a bounded-variable LP),
then quantize the relaxed solution back onto the alphabet.  PSK decision
sectors give 2M margin rows; QAM slicing cells give up to 4M rows plus a
common receive-scale variable.  The linear baselines (regularized
zero-forcing, with optional envelope projection) share the same interfaces.
"""

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import lp
from ._validation import check_channel, check_symbol_vector
from .constellation import qam_region_spec
from .exceptions import (DimensionMismatch, InvalidOrder, SingularChannel,
                         SolverFailure)
from .quantize import ce_quantize, polygon_spec

SQRT2 = float(np.sqrt(2.0))
_DISTORTION_EPS = 1e-9

_MUTATIONS = set()


@contextmanager
def mutation(name):
    """Deliberately corrupt a build step; used by the self-test harness to
    confirm the invariant suite can catch an injected bug."""
    _MUTATIONS.add(name)
    try:
        yield
    finally:
        _MUTATIONS.discard(name)


@dataclass(frozen=True)
class LpStats:
    """Solve diagnostics attached to a precoding result."""

    iterations: int
    pivots: int
    bound_flips: int
    op_count: int
    status: lp.Status
    objective: float


@dataclass(frozen=True)
class PrecodeResult:
    """One precoded symbol vector at the P_tx = N scale (unit amplitude).

    x is the relaxed solution inside the Q-gon, t its constant-envelope
    quantization, delta the maximized margin, alpha the receive scale (None
    for PSK, a scalar for joint QAM, an array for per-user QAM).
    distorted_fraction counts entries the quantizer moved by more than 1e-9;
    mse is ||t - x||^2.
    """

    x: np.ndarray
    t: np.ndarray
    delta: float
    alpha: object
    lp_stats: LpStats
    distorted_fraction: float
    mse: float


@dataclass(frozen=True)
class PskLpBuild:
    """Assembled margin LP for one PSK symbol vector."""

    problem: lp.LpProblem
    order: int
    theta: float
    n_users: int
    n_antennas: int
    sr_rows: int
    polygon: object


@dataclass(frozen=True)
class QamLpBuild:
    """Assembled margin LP for one or more QAM symbol vectors.

    row_map labels every margin row as (instance, user, kind) with kind in
    {re_floor, im_floor, im_cap, re_cap}; cap rows with infinite cell width
    are deleted rather than built.  Columns are the stacked per-instance
    [Re x; Im x], then one sqrt(2)*delta per instance, then the alpha
    column(s).
    """

    problem: lp.LpProblem
    order: int
    n_users: int
    n_antennas: int
    n_instances: int
    per_user_alpha: bool
    row_map: tuple
    regions: tuple
    polygon: object


def _reim_stacks(Hrot):
    """[Re, -Im] and [Im, Re] stacks of a rotated channel."""
    return (np.hstack([Hrot.real, -Hrot.imag]),
            np.hstack([Hrot.imag, Hrot.real]))


def build_psk_lp(H, s, q, theta):
    """Margin LP over [Re x; Im x; delta] for PSK symbols of half-angle theta.

    Rows: 2M sector constraints (M half-plane rows in the S = 2 limit where
    tan(theta) diverges), then the Q-gon rows; the first polygon block is
    carried as the +-cos(pi/Q) box on the coordinates.
    """
    H = np.asarray(H, dtype=complex)
    s = np.asarray(s, dtype=complex)
    m_users, n_ant = H.shape
    Hrot = np.conj(s)[:, None] * H
    A_, B_ = _reim_stacks(Hrot)
    if "sr-sign" in _MUTATIONS:
        A_ = -A_
    ones = np.ones((m_users, 1))
    if theta >= np.pi / 2 - 1e-12:
        sr = np.hstack([-A_, ones])
    else:
        tan_t = np.tan(theta)
        sec_t = 1.0 / np.cos(theta)
        sr = np.vstack([
            np.hstack([B_ - tan_t * A_, sec_t * ones]),
            np.hstack([-B_ - tan_t * A_, sec_t * ones]),
        ])
    poly = polygon_spec(q, n_ant)
    e_pad = np.hstack([poly.E, np.zeros((poly.E.shape[0], 1))])
    A_all = np.vstack([sr, e_pad])
    b = np.concatenate([np.zeros(sr.shape[0]), np.full(e_pad.shape[0], poly.bound)])
    c = np.zeros(2 * n_ant + 1)
    c[-1] = 1.0
    lower = np.concatenate([np.full(2 * n_ant, -poly.bound), [0.0]])
    upper = np.concatenate([np.full(2 * n_ant, poly.bound), [np.inf]])
    problem = lp.LpProblem(c=c, A=A_all, b=b, lower=lower, upper=upper)
    return PskLpBuild(problem=problem, order=q, theta=theta, n_users=m_users,
                      n_antennas=n_ant, sr_rows=sr.shape[0], polygon=poly)


def build_qam_lp(H, S, q, max_coord, per_user_alpha=False):
    """Margin LP for QAM symbol vectors S of shape (M,) or (B, M).

    Block instances share the alpha column and each carries its own
    sqrt(2)*delta; the objective maximizes the sum of the delta columns.
    per_user_alpha replaces the shared column by one alpha per user
    (single instance only).
    """
    H = np.asarray(H, dtype=complex)
    S = np.atleast_2d(np.asarray(S, dtype=complex))
    n_blocks, m_users = S.shape
    n_ant = H.shape[1]
    if per_user_alpha and n_blocks != 1:
        raise ValueError("per-user alpha is defined for a single instance")
    poly = polygon_spec(q, n_ant)
    nx = 2 * n_ant
    n_alpha = m_users if per_user_alpha else 1
    n_cols = nx * n_blocks + n_blocks + n_alpha
    delta_col = lambda blk: nx * n_blocks + blk
    alpha_col = lambda user: nx * n_blocks + n_blocks + (user if per_user_alpha else 0)

    rows, rhs, row_map, regions = [], [], [], []
    for blk in range(n_blocks):
        s = S[blk]
        region = qam_region_spec(s, max_coord)
        regions.append(region)
        rot = (np.sign(s.real) - 1j * np.sign(s.imag)) / SQRT2
        Hrot = rot[:, None] * H
        V, W = _reim_stacks(Hrot)
        if "sr-sign" in _MUTATIONS:
            V = -V
        cr, ci = region.c.real, region.c.imag
        # The rotation folds every quadrant onto the diagonal frame.  In
        # quadrants where sgn(Re s) and sgn(Im s) differ, the two combined
        # rows swap which axis they constrain, so the cap widths (and the
        # row labels) swap with them; the floor offsets come out of c
        # automatically.
        sigma = np.sign(s.real) * np.sign(s.imag)
        xcols = slice(nx * blk, nx * (blk + 1))
        for m in range(m_users):
            def _row(coeff, alpha_coeff, kind):
                row = np.zeros(n_cols)
                row[xcols] = coeff
                row[delta_col(blk)] = 1.0
                row[alpha_col(m)] = alpha_coeff
                rows.append(row)
                rhs.append(0.0)
                row_map.append((blk, m, kind))

            plus = sigma[m] > 0
            _row(W[m] - V[m], cr[m] - ci[m],
                 "re_floor" if plus else "im_floor")
            _row(-W[m] - V[m], cr[m] + ci[m],
                 "im_floor" if plus else "re_floor")
            xi_sum = region.xi_im[m] if plus else region.xi_re[m]
            if np.isfinite(xi_sum):
                _row(W[m] + V[m], -cr[m] - ci[m] - SQRT2 * xi_sum,
                     "im_cap" if plus else "re_cap")
            xi_diff = region.xi_re[m] if plus else region.xi_im[m]
            if np.isfinite(xi_diff):
                _row(-W[m] + V[m], -cr[m] + ci[m] - SQRT2 * xi_diff,
                     "re_cap" if plus else "im_cap")

    for blk in range(n_blocks):
        if poly.E.size:
            block_rows = np.zeros((poly.E.shape[0], n_cols))
            block_rows[:, nx * blk:nx * (blk + 1)] = poly.E
            rows.extend(block_rows)
            rhs.extend(np.full(poly.E.shape[0], poly.bound))
            row_map.extend((blk, None, "polygon") for _ in range(poly.E.shape[0]))

    A_all = np.vstack(rows)
    c = np.zeros(n_cols)
    for blk in range(n_blocks):
        c[delta_col(blk)] = 1.0
    lower = np.concatenate([np.tile(np.full(nx, -poly.bound), n_blocks),
                            np.zeros(n_blocks + n_alpha)])
    upper = np.concatenate([np.tile(np.full(nx, poly.bound), n_blocks),
                            np.full(n_blocks + n_alpha, np.inf)])
    problem = lp.LpProblem(c=c, A=A_all, b=np.asarray(rhs), lower=lower, upper=upper)
    return QamLpBuild(problem=problem, order=q, n_users=m_users, n_antennas=n_ant,
                      n_instances=n_blocks, per_user_alpha=per_user_alpha,
                      row_map=tuple(row_map), regions=tuple(regions), polygon=poly)


def _corner_hint(H, S, bound, n_cols):
    """Sign corner of the zero-forcing point, a cheap rest for the dual method.

    The margin optimum parks most antenna coordinates on the box, almost
    always on the side the unquantized zero-forcing solution picks, so this
    corner leaves the solver only the few interior coordinates to find.
    """
    try:
        W = H.conj().T @ np.linalg.solve(H @ H.conj().T, S.T)
    except np.linalg.LinAlgError:
        return None
    hint = np.zeros(n_cols)
    n = H.shape[1]
    for blk in range(W.shape[1]):
        coords = np.concatenate([W[:, blk].real, W[:, blk].imag])
        hint[2 * n * blk:2 * n * (blk + 1)] = np.where(coords >= 0, bound, -bound)
    return hint


def _solve_or_raise(problem, H, S, solver_opts):
    opts = {"algorithm": "dual"}
    hint = _corner_hint(H, S, float(problem.upper[0]), problem.n)
    if hint is not None:
        opts["start"] = hint
    opts.update(solver_opts)
    sol = lp.solve(problem, **opts)
    if sol.status is not lp.Status.OPTIMAL:
        raise SolverFailure(f"margin LP ended with status {sol.status.value}")
    return sol


def _stats(sol, extra=()):
    return LpStats(iterations=sol.iterations + sum(s.iterations for s in extra),
                   pivots=sol.pivots + sum(s.pivots for s in extra),
                   bound_flips=sol.bound_flips + sum(s.bound_flips for s in extra),
                   op_count=sol.op_count + sum(s.op_count for s in extra),
                   status=sol.status, objective=sol.objective)


def _face_midpoint(build, sol):
    """Central optimal transmit points for a joint build, one per instance.

    With the margins and the shared scale frozen at their solved values the
    instances decouple and each transmit point is free on a face of equally
    good solutions; the coupling leaves slack instances far more room than a
    single-vector solve ever has.  A basic solution sits at a corner of that
    face with nearly every coordinate parked on the box, which understates
    how much the quantizer moves the block design actually in use.  Averaging
    the two extreme points of the face along the all-ones direction puts
    every coordinate the face leaves free strictly inside its bounds, the way
    a path-following solver settles on a non-unique optimum.  Instances whose
    face collapses to the solved corner come back unchanged.
    """
    p = build.problem
    n, blocks = build.n_antennas, build.n_instances
    nx = 2 * n
    alpha = sol.x[nx * blocks + blocks]
    ones = np.ones(nx)
    centers, face_sols = [], []
    for blk in range(blocks):
        rows = [i for i, entry in enumerate(build.row_map) if entry[0] == blk]
        xcols = slice(nx * blk, nx * (blk + 1))
        sub = p.A[rows]
        b = (p.b[rows] - sub[:, nx * blocks + blk] * sol.x[nx * blocks + blk]
             - sub[:, -1] * alpha)
        ends = []
        for sign in (1.0, -1.0):
            face = lp.LpProblem(c=sign * ones, A=sub[:, xcols], b=b,
                                lower=p.lower[xcols], upper=p.upper[xcols])
            fsol = lp.solve(face, algorithm="dual")
            if fsol.status is not lp.Status.OPTIMAL:
                ends = None
                break
            ends.append(fsol.x)
            face_sols.append(fsol)
        centers.append(sol.x[xcols] if ends is None else 0.5 * (ends[0] + ends[1]))
    return centers, face_sols


def _quantize_result(xprime, n_ant, q, delta, alpha, stats):
    x = xprime[:n_ant] + 1j * xprime[n_ant:]
    t = ce_quantize(x, q)
    moved = np.abs(t - x) > _DISTORTION_EPS
    return PrecodeResult(x=x, t=t, delta=float(delta), alpha=alpha, lp_stats=stats,
                         distorted_fraction=float(np.mean(moved)),
                         mse=float(np.sum(np.abs(t - x) ** 2)))


def msm_psk(H, s, q, c, **solver_opts):
    """Maximum-safety-margin precoding for one PSK symbol vector.

    Returns a PrecodeResult at unit amplitude; scale t by sqrt(P_tx/N) for a
    power sweep (the LP itself never depends on P_tx).
    """
    if c.kind != "psk":
        raise InvalidOrder("msm_psk needs a PSK constellation")
    H = check_channel(H)
    s = check_symbol_vector(s, H.shape[0])
    build = build_psk_lp(H, s, q, np.pi / c.order)
    sol = _solve_or_raise(build.problem, H, s[None, :], solver_opts)
    n = build.n_antennas
    return _quantize_result(sol.x[:2 * n], n, q, delta=sol.x[2 * n],
                            alpha=None, stats=_stats(sol))


def msm_qam(H, s, q, c, **solver_opts):
    """Maximum-safety-margin precoding for one QAM symbol vector (shared alpha)."""
    results = msm_qam_block(H, np.atleast_2d(s), q, c, **solver_opts)
    return results[0]


def msm_qam_block(H, S, q, c, **solver_opts):
    """Joint precoding of B QAM symbol vectors with one common receive scale.

    Returns B PrecodeResults (one per instance) that share alpha and the
    solve statistics; the LP maximizes the sum of the per-instance margins.
    For B > 1 each returned x is the midpoint of the instance's optimal face
    rather than the solver's corner of it; B = 1 has no coupling slack and
    reduces exactly to msm_qam.
    """
    if c.kind != "qam":
        raise InvalidOrder("msm_qam needs a QAM constellation")
    H = check_channel(H)
    S = np.atleast_2d(np.asarray(S, dtype=complex))
    if S.shape[1] != H.shape[0]:
        raise DimensionMismatch(
            f"symbol block is {S.shape[1]}-user but the channel has {H.shape[0]} rows")
    build = build_qam_lp(H, S, q, c.max_coord)
    sol = _solve_or_raise(build.problem, H, S, solver_opts)
    n, blocks = build.n_antennas, build.n_instances
    alpha = float(sol.x[2 * n * blocks + blocks])
    if blocks > 1:
        centers, face_sols = _face_midpoint(build, sol)
        stats = _stats(sol, face_sols)
    else:
        centers = [sol.x[:2 * n]]
        stats = _stats(sol)
    out = []
    for blk in range(blocks):
        delta = sol.x[2 * n * blocks + blk] / SQRT2
        out.append(_quantize_result(centers[blk], n, q, delta, alpha, stats))
    return out


def msm_qam_per_user_alpha(H, s, q, c, **solver_opts):
    """QAM margin precoding with an individual receive scale per user."""
    if c.kind != "qam":
        raise InvalidOrder("msm_qam needs a QAM constellation")
    H = check_channel(H)
    s = check_symbol_vector(s, H.shape[0])
    build = build_qam_lp(H, s, q, c.max_coord, per_user_alpha=True)
    sol = _solve_or_raise(build.problem, H, s[None, :], solver_opts)
    n = build.n_antennas
    alpha = sol.x[2 * n + 1:].copy()
    return _quantize_result(sol.x[:2 * n], n, q, delta=sol.x[2 * n] / SQRT2,
                            alpha=alpha, stats=_stats(sol))


def wf_filter(H, ptx, avg_power, noise_var=1.0):
    """Regularized zero-forcing filter and its power normalization.

    T = H^H (H H^H + (M * noise_var / P_tx) I)^{-1}, scaled by beta so that
    E||beta T s||^2 = P_tx under uniform signaling with E|s|^2 = avg_power.
    """
    H = check_channel(H)
    m_users = H.shape[0]
    gram = H @ H.conj().T + (m_users * noise_var / ptx) * np.eye(m_users)
    try:
        T = H.conj().T @ np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularChannel("channel Gram matrix is singular") from exc
    fro2 = float(np.sum(np.abs(T) ** 2))
    if not np.isfinite(fro2) or fro2 <= 0.0:
        raise SingularChannel("zero or non-finite precoding filter")
    beta = np.sqrt(ptx / (avg_power * fro2))
    return T, float(beta)


def wf_precode(H, S, ptx, c, noise_var=1.0):
    """Linear baseline x = beta T s for symbol vectors S of shape (..., M)."""
    T, beta = wf_filter(H, ptx, c.avg_power, noise_var)
    return beta * (np.asarray(S, dtype=complex) @ T.T)


def wf_ce_precode(H, S, ptx, c, noise_var=1.0):
    """Phase-only projection of the linear baseline (Q = infinity envelope)."""
    x = wf_precode(H, S, ptx, c, noise_var)
    n_ant = H.shape[1]
    return np.sqrt(ptx / n_ant) * np.exp(1j * np.angle(x))


def qwf_precode(H, S, q, ptx, c, noise_var=1.0):
    """Constant-envelope quantization of the linear baseline."""
    x = wf_precode(H, S, ptx, c, noise_var)
    return ce_quantize(x, q, ptx=ptx, n=H.shape[1])
