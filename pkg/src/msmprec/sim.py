"""Monte-Carlo link-level engine: channels, noise, blind gain, BER counting.

One work unit is a channel realization.  Each realization owns the RNG stream
default_rng([seed, index]) and draws, in this fixed order: channel H, CSI
perturbation, symbol indices, noise.  The noise block is shared across the
power grid and across precoders (common random numbers), so curve gaps are
paired comparisons.  Envelope precoders solve once at P_tx = N and rescale;
the linear family re-derives its filter at every grid point because the
regularizer depends on P_tx.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from .constellation import detect, named_constellation
from .exceptions import ConfigError, DegenerateBlock, DimensionMismatch
from .precoder import (msm_psk, msm_qam, msm_qam_block,
                       msm_qam_per_user_alpha, qwf_precode, wf_ce_precode,
                       wf_precode)

logger = logging.getLogger("msmprec.sim")

PRECODER_NAMES = ("msm", "wf", "wf-ce", "qwf")


@dataclass(frozen=True)
class SimConfig:
    """Experiment description; every field is echoed into output metadata."""

    n_antennas: int = 64
    n_users: int = 8
    modulation: str = "qpsk"
    phase_count: int = 4
    precoders: tuple = ("msm",)
    ptx_db: tuple = tuple(float(p) for p in range(-10, 15))
    nu: float = 0.0
    noise_var: float = 1.0
    n_channels: int = 20
    vectors_per_channel: int = 128
    gain_block: int = 128
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not 1 <= self.n_users <= self.n_antennas:
            raise ConfigError("need 1 <= n_users <= n_antennas")
        if not 0.0 <= self.nu <= 1.0:
            raise ConfigError("nu must lie in [0, 1]")
        if self.noise_var < 0.0:
            raise ConfigError("noise_var must be nonnegative")
        if self.gain_block < 1:
            raise ConfigError("gain_block must be at least 1")
        if self.n_channels < 1 or self.vectors_per_channel < 1:
            raise ConfigError("need at least one channel and one vector")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not self.ptx_db:
            raise ConfigError("empty transmit-power grid")
        bad = [p for p in self.precoders if p not in PRECODER_NAMES]
        if bad or not self.precoders:
            raise ConfigError(f"unknown precoders {bad}; pick from {PRECODER_NAMES}")
        # fail early on a bad constellation name
        named_constellation(self.modulation)

    def describe(self):
        """Stable one-line parameter echo for CSV headers."""
        parts = [f"n_antennas={self.n_antennas}", f"n_users={self.n_users}",
                 f"modulation={self.modulation}", f"phase_count={self.phase_count}",
                 "precoders=" + "+".join(self.precoders),
                 "ptx_db=" + "|".join(format(p, ".12g") for p in self.ptx_db),
                 f"nu={format(self.nu, '.12g')}",
                 f"noise_var={format(self.noise_var, '.12g')}",
                 f"n_channels={self.n_channels}",
                 f"vectors_per_channel={self.vectors_per_channel}",
                 f"gain_block={self.gain_block}", f"seed={self.seed}"]
        return " ".join(parts)


@dataclass(frozen=True)
class BerRecord:
    """One aggregated BER point with its Monte-Carlo standard error."""

    precoder: str
    modulation: str
    phase_count: int
    ptx_db: float
    nu: float
    bit_errors: int
    bits_total: int
    ber: float
    ber_se: float
    mean_delta: float
    mean_alpha: float
    mean_iterations: float
    mean_op_count: float


def _crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def gen_channel(n_antennas, n_users, rng):
    """i.i.d. CN(0, 1) channel matrix of shape (n_users, n_antennas)."""
    return _crandn(rng, (n_users, n_antennas))


def corrupt_csi(H, nu, rng):
    """Channel estimate sqrt(1-nu) H + sqrt(nu) Gamma with unit entry variance.

    The perturbation is drawn even at nu = 0 so that downstream draws stay
    aligned across nu sweeps.
    """
    gamma = _crandn(rng, H.shape)
    return np.sqrt(1.0 - nu) * H + np.sqrt(nu) * gamma


def transmit(H, t, rng=None, noise_var=1.0, noise=None):
    """Receive points r = H t + noise for transmit rows t of shape (..., N).

    Supply noise explicitly (e.g. zeros) for the deterministic path; otherwise
    it is drawn CN(0, noise_var I) from rng.
    """
    t = np.asarray(t)
    if t.shape[-1] != H.shape[1]:
        raise DimensionMismatch(
            f"transmit vector has {t.shape[-1]} entries for {H.shape[1]} antennas")
    clean = t @ H.T
    if noise is None:
        if noise_var == 0.0:
            return clean
        noise = np.sqrt(noise_var) * _crandn(rng, clean.shape)
    return clean + noise


def estimate_gain(r_block, c):
    """Blind per-user receive scale from a block of received samples.

    r_block has shape (T,) or (T, M); returns the matching scalar or (M,)
    array g = E[|Re s| + |Im s|] / block mean of |Re r| + |Im r|.
    """
    r_block = np.asarray(r_block)
    denom = np.mean(np.abs(r_block.real) + np.abs(r_block.imag), axis=0)
    if np.any(denom <= 0.0):
        raise DegenerateBlock("all-zero received block; cannot scale blindly")
    return c.mean_abs_sum / denom


def _blind_scale(r, c, gain_block):
    """Scale each gain_block-sized stretch of rows by its own estimate."""
    u = np.empty_like(r)
    for start in range(0, r.shape[0], gain_block):
        block = r[start:start + gain_block]
        u[start:start + gain_block] = block * estimate_gain(block, c)
    return u


def _popcount_table(order):
    return np.array([bin(v).count("1") for v in range(order)], dtype=np.int64)


@dataclass(frozen=True)
class _ChannelOut:
    """Per-realization counters; merged commutatively by run_ber."""

    errors: dict        # (precoder, ptx index) -> bit errors
    bers: dict          # (precoder, ptx index) -> per-realization BER
    aux: dict           # precoder -> (sum delta, sum alpha, sum iter, sum ops, solves)
    bits_per_point: int


def _msm_results(H_est, c, S, phase_count):
    if c.kind == "psk":
        return [msm_psk(H_est, s, phase_count, c) for s in S]
    return [msm_qam(H_est, s, phase_count, c) for s in S]


def _simulate_channel(cfg, ch):
    rng = np.random.default_rng([cfg.seed, ch])
    c = named_constellation(cfg.modulation)
    H = gen_channel(cfg.n_antennas, cfg.n_users, rng)
    H_est = corrupt_csi(H, cfg.nu, rng)
    V = cfg.vectors_per_channel
    idx = rng.integers(0, c.order, size=(V, cfg.n_users))
    noise = np.sqrt(cfg.noise_var) * _crandn(rng, (V, cfg.n_users))
    S = c.points[idx]
    pop = _popcount_table(c.order)
    labels_true = c.labels[idx]
    bits_per_point = V * cfg.n_users * c.bits_per_symbol
    ptx_lin = [10.0 ** (p / 10.0) for p in cfg.ptx_db]

    errors, bers, aux = {}, {}, {}
    for prec in cfg.precoders:
        if prec == "msm":
            res = _msm_results(H_est, c, S, cfg.phase_count)
            t_unit = np.vstack([r.t for r in res])
            aux[prec] = (
                float(sum(r.delta for r in res)),
                float(sum(r.alpha for r in res)) if c.kind == "qam" else float("nan"),
                float(sum(r.lp_stats.iterations for r in res)),
                float(sum(r.lp_stats.op_count for r in res)),
                len(res),
            )
        else:
            aux[prec] = (float("nan"),) * 4 + (0,)
        for k, ptx in enumerate(ptx_lin):
            if prec == "msm":
                t = np.sqrt(ptx / cfg.n_antennas) * t_unit
            elif prec == "wf":
                t = wf_precode(H_est, S, ptx, c, cfg.noise_var)
            elif prec == "wf-ce":
                t = wf_ce_precode(H_est, S, ptx, c, cfg.noise_var)
            else:
                t = qwf_precode(H_est, S, cfg.phase_count, ptx, c, cfg.noise_var)
            r = transmit(H, t, noise=noise)
            u = _blind_scale(r, c, cfg.gain_block) if c.kind == "qam" else r
            nerr = int(pop[labels_true ^ c.labels[detect(u, c)]].sum())
            errors[(prec, k)] = nerr
            bers[(prec, k)] = nerr / bits_per_point
    return _ChannelOut(errors=errors, bers=bers, aux=aux,
                       bits_per_point=bits_per_point)


def _safe_channel(cfg, ch):
    try:
        return _simulate_channel(cfg, ch)
    except Exception as exc:  # noqa: BLE001 - realization-level isolation
        logger.warning("realization %d dropped: %s", ch, exc)
        return None


def run_ber(config):
    """Monte-Carlo BER sweep; returns one BerRecord per (precoder, Ptx) key.

    Realizations whose margin LP fails are dropped with a logged diagnostic;
    the remaining counters still aggregate.  Identical config and seed give
    bit-identical records regardless of the worker count.
    """
    worker = partial(_safe_channel, config)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            raw = list(pool.map(worker, range(config.n_channels)))
    else:
        raw = [worker(ch) for ch in range(config.n_channels)]
    outs = [o for o in raw if o is not None]
    if not outs:
        raise ConfigError("every channel realization failed")

    records = []
    for prec in config.precoders:
        dsum, asum, isum, osum, solves = (sum(o.aux[prec][i] for o in outs)
                                          for i in range(5))
        mean_delta = dsum / solves if solves else float("nan")
        mean_alpha = asum / solves if solves else float("nan")
        mean_iter = isum / solves if solves else float("nan")
        mean_ops = osum / solves if solves else float("nan")
        for k, ptx_db in enumerate(config.ptx_db):
            nerr = sum(o.errors[(prec, k)] for o in outs)
            bits = sum(o.bits_per_point for o in outs)
            per_ch = np.array([o.bers[(prec, k)] for o in outs])
            se = float(per_ch.std(ddof=1) / np.sqrt(len(outs))) if len(outs) > 1 else 0.0
            records.append(BerRecord(
                precoder=prec, modulation=config.modulation,
                phase_count=config.phase_count, ptx_db=float(ptx_db),
                nu=config.nu, bit_errors=nerr, bits_total=bits,
                ber=nerr / bits, ber_se=se, mean_delta=mean_delta,
                mean_alpha=mean_alpha, mean_iterations=mean_iter,
                mean_op_count=mean_ops))
    return records


@dataclass(frozen=True)
class AlphaRangeStats:
    """Receive-scale spread, averaged over channel realizations."""

    n_users: int
    joint: float
    per_user: float
    n_vectors: int


def alpha_range_stats(config):
    """Relative range (max - min)/mean of the QAM receive scale.

    joint: one shared alpha per symbol vector, spread taken across the
    vectors of a realization.  per_user: individually scaled users, each
    user's spread taken across the same vectors, reported as the worst user.
    Both variants run on identical channel and symbol draws, so the
    comparison between them is paired.
    """
    c = named_constellation(config.modulation)
    if c.kind != "qam":
        raise ConfigError("receive-scale statistics only apply to QAM")
    joint_vals, per_user_vals = [], []
    for ch in range(config.n_channels):
        rng = np.random.default_rng([config.seed, ch])
        H = gen_channel(config.n_antennas, config.n_users, rng)
        H_est = corrupt_csi(H, config.nu, rng)
        idx = rng.integers(0, c.order, size=(config.vectors_per_channel,
                                             config.n_users))
        S = c.points[idx]
        alphas = np.array([msm_qam(H_est, s, config.phase_count, c).alpha
                           for s in S])
        per_user = np.vstack([
            msm_qam_per_user_alpha(H_est, s, config.phase_count, c).alpha
            for s in S])
        joint_vals.append((alphas.max() - alphas.min()) / alphas.mean())
        spread = (per_user.max(axis=0) - per_user.min(axis=0)) / per_user.mean(axis=0)
        per_user_vals.append(spread.max())
    return AlphaRangeStats(n_users=config.n_users,
                           joint=float(np.mean(joint_vals)),
                           per_user=float(np.mean(per_user_vals)),
                           n_vectors=config.vectors_per_channel)


@dataclass(frozen=True)
class IterationStats:
    """Mean simplex effort per margin solve for one (modulation, Q) pair."""

    modulation: str
    phase_count: int
    mean_iterations: float
    mean_op_count: float
    n_solves: int


def iteration_stats(config):
    """Average solver iterations over the configured realizations."""
    c = named_constellation(config.modulation)
    iters, ops = [], []
    for ch in range(config.n_channels):
        rng = np.random.default_rng([config.seed, ch])
        H = gen_channel(config.n_antennas, config.n_users, rng)
        H_est = corrupt_csi(H, config.nu, rng)
        idx = rng.integers(0, c.order, size=(config.vectors_per_channel,
                                             config.n_users))
        for r in _msm_results(H_est, c, c.points[idx], config.phase_count):
            iters.append(r.lp_stats.iterations)
            ops.append(r.lp_stats.op_count)
    return IterationStats(modulation=config.modulation,
                          phase_count=config.phase_count,
                          mean_iterations=float(np.mean(iters)),
                          mean_op_count=float(np.mean(ops)),
                          n_solves=len(iters))


@dataclass(frozen=True)
class DistortionStats:
    """Quantizer impact when precoding B symbol vectors jointly."""

    block_size: int
    distorted_fraction: float
    mse: float
    n_vectors: int


def distortion_stats(config, block_size):
    """Mean fraction of moved antennas and mean ||t - x||^2 per vector."""
    c = named_constellation(config.modulation)
    if c.kind != "qam":
        raise ConfigError("block precoding statistics only apply to QAM")
    if config.vectors_per_channel % block_size:
        raise ConfigError("vectors_per_channel must be a multiple of block_size")
    fracs, mses = [], []
    for ch in range(config.n_channels):
        rng = np.random.default_rng([config.seed, ch])
        H = gen_channel(config.n_antennas, config.n_users, rng)
        H_est = corrupt_csi(H, config.nu, rng)
        idx = rng.integers(0, c.order, size=(config.vectors_per_channel,
                                             config.n_users))
        S = c.points[idx]
        for start in range(0, config.vectors_per_channel, block_size):
            for res in msm_qam_block(H_est, S[start:start + block_size],
                                     config.phase_count, c):
                fracs.append(res.distorted_fraction)
                mses.append(res.mse)
    return DistortionStats(block_size=block_size,
                           distorted_fraction=float(np.mean(fracs)),
                           mse=float(np.mean(mses)), n_vectors=len(fracs))


# ---------------------------------------------------------------------------
# CSV emission.  Format: "# msmprec-csv v1" magic, a kind line, one config
# echo line, then a plain header row and '.12g'-formatted values.  Byte
# stability given (config, seed) is part of the contract.

CSV_MAGIC = "# msmprec-csv v1"


def _fmt_cell(value):
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_csv(path, kind, fieldnames, rows, config_line):
    if isinstance(config_line, str):
        config_line = [config_line]
    lines = [CSV_MAGIC, f"# kind: {kind}"]
    lines += [f"# config: {line}" for line in config_line]
    lines.append(",".join(fieldnames))
    for row in rows:
        lines.append(",".join(_fmt_cell(row[name]) for name in fieldnames))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


BER_FIELDS = ("precoder", "modulation", "phase_count", "ptx_db", "nu",
              "bit_errors", "bits_total", "ber", "ber_se", "mean_delta",
              "mean_alpha", "mean_iterations", "mean_op_count")


def write_ber_csv(path, records, config):
    rows = [{name: getattr(rec, name) for name in BER_FIELDS}
            for rec in records]
    write_csv(path, "ber", BER_FIELDS, rows, config.describe())
