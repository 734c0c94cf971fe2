"""Named invariant checks, each backed by an independent oracle.

The suite exists so a fresh checkout (or a deliberate mutation, see
precoder.mutation) can be judged in seconds without the full test run.  Every
check re-derives its expectation by enumeration or closed form, never by the
code path under test.
"""

import numpy as np

from . import lp
from .constellation import named_constellation, safety_margin
from .precoder import msm_psk, msm_qam
from .quantize import ce_quantize, phase_quantize, polygon_contains
from .reference import (best_discrete_margin, brute_force_lp,
                        polygon_contains_rows)
from .sim import SimConfig, estimate_gain, run_ber


def _random_bounded_lp(rng):
    n = int(rng.integers(1, 6))
    m = int(rng.integers(1, 7))
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m)
    c = rng.standard_normal(n)
    lower = -rng.uniform(0.2, 2.0, n)
    upper = lower + rng.uniform(0.2, 3.0, n)
    senses = tuple(rng.choice(["<=", ">="], m))
    return c, A, b, senses, lower, upper


def check_lp_vertex_oracle(seed=0, n_problems=60, tol=1e-8):
    """Solver optimum equals the vertex-enumeration optimum on random LPs."""
    rng = np.random.default_rng(seed)
    solved = 0
    for _ in range(n_problems):
        c, A, b, senses, lower, upper = _random_bounded_lp(rng)
        ref_status, ref_val, _ = brute_force_lp(c, A, b, senses, lower, upper)
        sol = lp.solve(lp.LpProblem(c=c, A=A, b=b, senses=senses,
                                    lower=lower, upper=upper))
        if ref_status == "infeasible":
            assert sol.status is lp.Status.INFEASIBLE, \
                f"oracle says infeasible, solver says {sol.status.value}"
            continue
        assert sol.status is lp.Status.OPTIMAL, \
            f"oracle optimum {ref_val:.6g}, solver says {sol.status.value}"
        assert abs(sol.objective - ref_val) <= tol, \
            f"objective {sol.objective!r} vs oracle {ref_val!r}"
        solved += 1
    return f"{n_problems} LPs, {solved} feasible, agree within {tol:g}"


def check_lp_degenerate_termination():
    """The classic cycling instance terminates at its known optimum."""
    problem = lp.LpProblem(
        c=np.array([0.75, -150.0, 0.02, -6.0]),
        A=np.array([[0.25, -60.0, -0.04, 9.0],
                    [0.5, -90.0, -0.02, 3.0],
                    [0.0, 0.0, 1.0, 0.0]]),
        b=np.array([0.0, 0.0, 1.0]),
        upper=np.full(4, np.inf))
    sol = lp.solve(problem)
    assert sol.status is lp.Status.OPTIMAL, sol.status
    assert abs(sol.objective - 0.05) <= 1e-9, sol.objective
    assert np.allclose(sol.x, [0.04, 0.0, 1.0, 0.0], atol=1e-9), sol.x
    return f"optimum {sol.objective:.6g} in {sol.iterations} iterations"


def check_quantizer_fixed_points():
    """Hand-computed quantizer values, idempotence, amplitude exactness."""
    assert abs(phase_quantize(np.pi, 4) - 5 * np.pi / 4) <= 1e-12
    t = ce_quantize(np.exp(1j * 3 * np.pi / 5), 8, ptx=4.0, n=1)
    assert abs(t - 2 * np.exp(1j * 5 * np.pi / 8)) <= 1e-12
    rng = np.random.default_rng(7)
    x = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    for q in (2, 4, 8, 16):
        t = ce_quantize(x, q)
        assert np.max(np.abs(ce_quantize(t, q) - t)) <= 1e-12, "not idempotent"
        assert np.max(np.abs(np.abs(t) - 1.0)) <= 1e-12, "envelope drifted"
        amp = np.abs(ce_quantize(x, q, ptx=5.0, n=x.size))
        assert np.max(np.abs(amp - np.sqrt(5.0 / x.size))) <= 1e-12
    return "fixed points, idempotence, envelope all exact"


def check_polygon_vertex_property():
    """Alphabet points sit inside their hull; pushed outward they leave it.

    Also rotational symmetry: membership is invariant under rotation by the
    grid step.
    """
    rng = np.random.default_rng(11)
    for q in (4, 8, 16):
        step = np.exp(2j * np.pi / q)
        verts = np.exp(1j * (2 * np.arange(q) + 1) * np.pi / q)
        assert polygon_contains(verts, q), "alphabet point excluded"
        assert not polygon_contains(verts * 1.001, q), "outside point admitted"
        pts = 0.7 * (rng.standard_normal(64) + 1j * rng.standard_normal(64))
        inside = polygon_contains(pts, q)
        assert polygon_contains(pts * step, q) == inside, "rotation changed it"
    return "vertex membership and rotational symmetry hold for Q in {4,8,16}"


def check_polygon_membership_crosscheck(seed=3, n_points=400):
    """Support-function membership agrees with the stacked row description."""
    rng = np.random.default_rng(seed)
    for q in (4, 8, 16, 32):
        for _ in range(n_points // 4):
            x = 1.2 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
            a = polygon_contains(x, q)
            b = polygon_contains_rows(x, q)
            assert a == b, f"Q={q}: support {a} vs rows {b} at {x}"
    return "both membership tests agree on random points"


def _random_psk_instance(rng, c, m_users=2, n_ant=4):
    H = (rng.standard_normal((m_users, n_ant))
         + 1j * rng.standard_normal((m_users, n_ant))) / np.sqrt(2)
    idx = rng.integers(0, c.order, m_users)
    return H, idx


def check_margin_consistency_psk(seed=5, n_instances=40):
    """LP margin equals the geometric margin of the relaxed receive points."""
    rng = np.random.default_rng(seed)
    c = named_constellation("qpsk")
    worst = 0.0
    for _ in range(n_instances):
        H, idx = _random_psk_instance(rng, c, m_users=2, n_ant=6)
        res = msm_psk(H, c.points[idx], 4, c)
        geo = float(np.min(safety_margin(H @ res.x, idx, c)))
        worst = max(worst, abs(geo - res.delta))
    assert worst <= 1e-6, f"margin mismatch up to {worst:.3g}"
    return f"{n_instances} instances, worst gap {worst:.2e}"


def check_margin_consistency_qam(seed=6, n_instances=40):
    """Same consistency check on the QAM path, including the receive scale."""
    rng = np.random.default_rng(seed)
    c = named_constellation("16qam")
    worst = 0.0
    for _ in range(n_instances):
        H, idx = _random_psk_instance(rng, c, m_users=2, n_ant=8)
        res = msm_qam(H, c.points[idx], 4, c)
        geo = float(np.min(safety_margin(H @ res.x, idx, c, alpha=res.alpha)))
        worst = max(worst, abs(geo - res.delta))
    assert worst <= 1e-6, f"margin mismatch up to {worst:.3g}"
    return f"{n_instances} instances, worst gap {worst:.2e}"


def check_discrete_dominance(seed=9, n_instances=25):
    """Relaxed margin dominates the best margin over the discrete alphabet."""
    rng = np.random.default_rng(seed)
    c = named_constellation("qpsk")
    for _ in range(n_instances):
        H, idx = _random_psk_instance(rng, c, m_users=2, n_ant=4)
        res = msm_psk(H, c.points[idx], 4, c)
        best, _ = best_discrete_margin(H, idx, c, 4)
        assert res.delta >= best - 1e-9, \
            f"relaxation {res.delta:.9f} below discrete best {best:.9f}"
    return f"{n_instances} instances, relaxation never undercuts enumeration"


def check_blind_gain_balanced_block():
    """A balanced block received at exactly twice the scale gives g = 1/2."""
    for name in ("16qam", "64qam", "4qam"):
        c = named_constellation(name)
        g = estimate_gain(2.0 * c.points, c)
        assert g == 0.5, f"{name}: expected exactly 0.5, got {g!r}"
    return "g = 0.5 exactly on doubled balanced blocks"


def check_noiseless_ber_zero():
    """With the noise hook off and positive margin, detection is error-free."""
    cfg = SimConfig(n_antennas=16, n_users=2, modulation="qpsk", phase_count=4,
                    precoders=("msm",), ptx_db=(0.0,), noise_var=0.0,
                    n_channels=2, vectors_per_channel=16, seed=123)
    records = run_ber(cfg)
    assert all(r.bit_errors == 0 for r in records), \
        [(r.precoder, r.bit_errors) for r in records]
    bits = sum(r.bits_total for r in records)
    return f"0 errors across {bits} noiseless bits"


CHECKS = (
    ("lp-vertex-oracle", check_lp_vertex_oracle),
    ("lp-degenerate-termination", check_lp_degenerate_termination),
    ("quantizer-fixed-points", check_quantizer_fixed_points),
    ("polygon-vertex-property", check_polygon_vertex_property),
    ("polygon-membership-crosscheck", check_polygon_membership_crosscheck),
    ("margin-consistency-psk", check_margin_consistency_psk),
    ("margin-consistency-qam", check_margin_consistency_qam),
    ("discrete-dominance", check_discrete_dominance),
    ("blind-gain-balanced-block", check_blind_gain_balanced_block),
    ("noiseless-ber-zero", check_noiseless_ber_zero),
)


def run_selftests(names=None):
    """Run the named checks (all by default); returns (name, ok, detail) rows."""
    selected = [(n, f) for n, f in CHECKS if names is None or n in names]
    results = []
    for name, func in selected:
        try:
            detail = func()
            results.append((name, True, detail))
        except Exception as exc:  # noqa: BLE001 - report, never abort the suite
            results.append((name, False, f"{type(exc).__name__}: {exc}"))
    return results
