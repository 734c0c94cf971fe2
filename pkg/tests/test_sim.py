"""Monte-Carlo harness: determinism, blind gain, aggregation, CSV format."""

import dataclasses

import numpy as np
import pytest

from msmprec import sim
from msmprec.constellation import named_constellation
from msmprec.exceptions import (ConfigError, DegenerateBlock,
                                DimensionMismatch, InvalidOrder)
from msmprec.sim import (BER_FIELDS, CSV_MAGIC, SimConfig, corrupt_csi,
                         estimate_gain, gen_channel, run_ber, transmit,
                         write_ber_csv, write_csv)

QAM16 = named_constellation("16qam")


def _tiny(**kw):
    base = dict(n_antennas=8, n_users=2, modulation="qpsk", phase_count=4,
                precoders=("msm",), ptx_db=(0.0, 6.0), n_channels=3,
                vectors_per_channel=8, seed=0)
    base.update(kw)
    return SimConfig(**base)


# ============================================================================
# CONFIG VALIDATION
# ============================================================================


class TestConfig:
    def test_describe_echoes_fields(self):
        text = _tiny(seed=3).describe()
        assert "seed=3" in text
        assert "modulation=qpsk" in text
        assert "ptx_db=0|6" in text

    def test_validation_messages(self):
        with pytest.raises(ConfigError, match="n_users"):
            _tiny(n_users=9)
        with pytest.raises(ConfigError, match="nu"):
            _tiny(nu=1.5)
        with pytest.raises(ConfigError, match="noise_var"):
            _tiny(noise_var=-0.1)
        with pytest.raises(ConfigError, match="gain_block"):
            _tiny(gain_block=0)
        with pytest.raises(ConfigError, match="at least one channel"):
            _tiny(n_channels=0)
        with pytest.raises(ConfigError, match="workers"):
            _tiny(workers=0)
        with pytest.raises(ConfigError, match="power grid"):
            _tiny(ptx_db=())
        with pytest.raises(ConfigError, match="unknown precoders"):
            _tiny(precoders=("msm", "dirty"))
        with pytest.raises(InvalidOrder, match="unknown constellation"):
            _tiny(modulation="17qam")


# ============================================================================
# CHANNEL, CSI, TRANSMIT
# ============================================================================


class TestChannel:
    def test_gen_channel_statistics(self):
        rng = np.random.default_rng(0)
        H = gen_channel(64, 8, rng)
        assert H.shape == (8, 64)
        # unit entry variance, split across the two components
        assert float(np.mean(np.abs(H) ** 2)) == pytest.approx(1.0, rel=0.1)

    def test_corrupt_csi_identity_at_zero(self):
        rng = np.random.default_rng(1)
        H = gen_channel(8, 2, rng)
        assert np.array_equal(corrupt_csi(H, 0.0, rng), H)

    def test_corrupt_csi_keeps_draws_aligned(self):
        """The perturbation is drawn even at nu = 0 so that later draws from
        the same stream do not depend on nu."""
        H = gen_channel(8, 2, np.random.default_rng(2))
        rng_a = np.random.default_rng(5)
        rng_b = np.random.default_rng(5)
        corrupt_csi(H, 0.0, rng_a)
        corrupt_csi(H, 0.4, rng_b)
        assert rng_a.integers(0, 1 << 30) == rng_b.integers(0, 1 << 30)

    def test_corrupt_csi_keeps_entry_variance(self):
        rng = np.random.default_rng(3)
        H = gen_channel(256, 16, rng)
        G = corrupt_csi(H, 0.3, rng)
        assert float(np.mean(np.abs(G) ** 2)) == pytest.approx(1.0, rel=0.1)

    def test_transmit_shapes_and_noise_paths(self):
        rng = np.random.default_rng(4)
        H = gen_channel(8, 2, rng)
        t = rng.standard_normal((5, 8)) + 0j
        clean = transmit(H, t, noise_var=0.0)
        np.testing.assert_allclose(clean, t @ H.T)
        np.testing.assert_array_equal(transmit(H, t, noise=np.zeros((5, 2))),
                                      clean)
        r1 = transmit(H, t, rng=np.random.default_rng(9))
        r2 = transmit(H, t, rng=np.random.default_rng(9))
        np.testing.assert_array_equal(r1, r2)
        assert not np.allclose(r1, clean)

    def test_transmit_rejects_wrong_width(self):
        rng = np.random.default_rng(5)
        H = gen_channel(8, 2, rng)
        with pytest.raises(DimensionMismatch, match="antennas"):
            transmit(H, np.zeros((3, 7)))


# ============================================================================
# BLIND GAIN
# ============================================================================


class TestBlindGain:
    def test_balanced_block_is_exact(self):
        # a block holding every constellation point once has the population
        # statistic, so the estimate inverts the scale exactly
        r = 2.0 * QAM16.points
        assert float(estimate_gain(r, QAM16)) == 0.5

    def test_per_user_columns(self):
        r = np.stack([2.0 * QAM16.points, 4.0 * QAM16.points], axis=1)
        np.testing.assert_array_equal(estimate_gain(r, QAM16), [0.5, 0.25])

    def test_zero_block_raises(self):
        with pytest.raises(DegenerateBlock, match="all-zero"):
            estimate_gain(np.zeros(4, dtype=complex), QAM16)


# ============================================================================
# BER RUNS
# ============================================================================


class TestRunBer:
    def test_records_grid(self):
        records = run_ber(_tiny())
        assert len(records) == 2  # one precoder, two grid points
        assert [r.ptx_db for r in records] == [0.0, 6.0]
        for r in records:
            assert r.bits_total == 3 * 8 * 2 * 2  # ch * vec * users * bits
            assert 0.0 <= r.ber <= 1.0
            assert r.mean_delta > 0
            assert np.isnan(r.mean_alpha)  # PSK has no receive scale

    def test_worker_count_does_not_change_results(self):
        serial = run_ber(_tiny(precoders=("msm", "wf")))
        parallel = run_ber(_tiny(precoders=("msm", "wf"), workers=2))
        # nan-aware: the linear baseline reports nan solver stats
        np.testing.assert_equal([dataclasses.asdict(r) for r in parallel],
                                [dataclasses.asdict(r) for r in serial])

    def test_noiseless_run_is_error_free(self):
        records = run_ber(_tiny(noise_var=0.0, ptx_db=(0.0,)))
        assert all(r.bit_errors == 0 and r.ber == 0.0 for r in records)

    def test_linear_baseline_reports_no_solver_stats(self):
        records = run_ber(_tiny(precoders=("wf",)))
        assert all(np.isnan(r.mean_delta) and np.isnan(r.mean_iterations)
                   for r in records)

    def test_more_power_helps_the_linear_baseline(self):
        cfg = SimConfig(n_antennas=16, n_users=2, modulation="qpsk",
                        precoders=("wf",), ptx_db=(-10.0, 12.0),
                        n_channels=4, vectors_per_channel=32, seed=1)
        lo, hi = run_ber(cfg)
        assert lo.ber > hi.ber

    def test_failed_realizations_are_dropped(self, monkeypatch):
        real = sim._simulate_channel

        def flaky(cfg, ch):
            if ch == 0:
                raise RuntimeError("boom")
            return real(cfg, ch)

        monkeypatch.setattr(sim, "_simulate_channel", flaky)
        records = run_ber(_tiny())
        assert records[0].bits_total == 2 * 8 * 2 * 2  # one channel dropped

    def test_all_failed_realizations_raise(self, monkeypatch):
        def boom(cfg, ch):
            raise RuntimeError("boom")

        monkeypatch.setattr(sim, "_simulate_channel", boom)
        with pytest.raises(ConfigError, match="every channel realization"):
            run_ber(_tiny())


# ============================================================================
# SUMMARY STATISTICS
# ============================================================================


class TestStats:
    def test_alpha_range_requires_qam(self):
        with pytest.raises(ConfigError, match="QAM"):
            sim.alpha_range_stats(_tiny())

    def test_distortion_requires_qam_and_divisible_blocks(self):
        with pytest.raises(ConfigError, match="QAM"):
            sim.distortion_stats(_tiny(), 1)
        with pytest.raises(ConfigError, match="multiple"):
            sim.distortion_stats(_tiny(modulation="16qam"), 3)

    def test_iteration_stats_smoke(self):
        st = sim.iteration_stats(_tiny(n_channels=1, vectors_per_channel=4))
        assert st.n_solves == 4
        assert st.mean_iterations > 0
        assert st.mean_op_count > 0

    def test_distortion_stats_smoke(self):
        st = sim.distortion_stats(
            _tiny(modulation="16qam", n_channels=1, vectors_per_channel=4), 2)
        assert st.block_size == 2
        assert st.n_vectors == 4
        assert 0.0 <= st.distorted_fraction <= 1.0
        assert st.mse >= 0.0


# ============================================================================
# CSV EMISSION
# ============================================================================


class TestCsv:
    def test_ber_csv_format_and_stability(self, tmp_path):
        records = run_ber(_tiny())
        cfg = _tiny()
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_ber_csv(a, records, cfg)
        write_ber_csv(b, records, cfg)
        assert a.read_bytes() == b.read_bytes()
        lines = a.read_text(encoding="ascii").splitlines()
        assert lines[0] == CSV_MAGIC
        assert lines[1] == "# kind: ber"
        assert lines[2].startswith("# config: ")
        assert "seed=0" in lines[2]
        assert lines[3] == ",".join(BER_FIELDS)
        assert len(lines) == 4 + len(records)
        # floats go out in .12g
        first = dict(zip(BER_FIELDS, lines[4].split(",")))
        assert first["ber"] == format(records[0].ber, ".12g")
        assert "\r" not in a.read_text(encoding="ascii")

    def test_generic_writer_takes_config_lines(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(path, "distortion", ("a", "b"),
                  [{"a": 1, "b": 0.5}, {"a": 2, "b": 0.25}],
                  ["first", "second"])
        lines = path.read_text().splitlines()
        assert lines[1] == "# kind: distortion"
        assert lines[2] == "# config: first"
        assert lines[3] == "# config: second"
        assert lines[4] == "a,b"
        assert lines[5] == "1,0.5"
