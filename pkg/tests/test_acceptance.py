"""Exit criteria, one test each, at their stated tolerances.

Every test prints a single ``[PASS]``/``[FAIL]`` line (visible without ``-s``).
Sweep lengths (slots per run) are fixed here, not tuned per outcome.
"""

import json
import time

import numpy as np
import pytest

from freebs import (
    FadingModel,
    VirtualQueueState,
    brute_force_decide,
    free_bs_decide,
    baseline_decide,
    rate_from_threshold,
    reference_config,
    threshold_from_rate,
    update_user_queue,
    update_z_queue,
)
from freebs.cli import main
from freebs.engine import SweepSpec, check_stability, run, run_sweep, simulate

SWEEP_SLOTS = 10_000  # slots per run in the power and user-count sweeps
V_SWEEP_SLOTS = 20_000  # Z needs ~V / (1 - mu2) slots to reach V; 20k covers V = 1000
REPS = 10
SEED = 0


@pytest.fixture
def report(capsys):
    def _report(number, ok, detail, elapsed, budget):
        ok = ok and elapsed < budget
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail} ({elapsed:.1f}s / {budget}s)")
        return ok

    return _report


def _random_slots(count, seed):
    """Yield (cfg, gains, queues) with N cycling over 1..8 and queues ~ U[0, 5]."""
    rng = np.random.default_rng(seed)
    cfgs = {n: reference_config(n, seed=seed + n) for n in range(1, 9)}
    models = {n: FadingModel.from_config(c) for n, c in cfgs.items()}
    for k in range(count):
        n = 1 + k % 8
        gains = models[n].sample(k + 1)
        queues = VirtualQueueState(rng.uniform(0, 5, n), float(rng.uniform(0, 5)))
        yield cfgs[n], gains, queues


def _paired_stats(res, field="offloading_factor"):
    """{(scheduler, value): per-rep array}, reps in seed order."""
    out = {}
    for r in res:
        out.setdefault((r["scheduler"], r["value"]), []).append(getattr(r["summary"], field))
    return {k: np.asarray(v, dtype=float) for k, v in out.items()}


def _se(x):
    return float(np.std(x, ddof=1) / np.sqrt(len(x)))


def test_1_oracle_equivalence(report):
    t = time.perf_counter()
    worst = 0.0
    for cfg, gains, queues in _random_slots(10_000, SEED):
        a = free_bs_decide(gains, queues, True, cfg).objective
        b = brute_force_decide(gains, queues, True, cfg).objective
        worst = max(worst, abs(a - b))
    el = time.perf_counter() - t
    ok = report(1, worst == 0.0, f"10^4 slots, max |free_bs - oracle| = {worst:g}", el, 30)
    assert ok


def test_2_threshold_continuum(report):
    t = time.perf_counter()
    worst = -np.inf
    for cfg, gains, queues in _random_slots(1_000, SEED + 1):
        grid = np.linspace(0.0, 2.0 * gains.bs_to_user.max(), 1001)[1:]
        gridded = brute_force_decide(gains, queues, True, cfg, gamma_grid=grid).objective
        plain = brute_force_decide(gains, queues, True, cfg).objective
        worst = max(worst, gridded - plain)
    el = time.perf_counter() - t
    ok = report(2, worst <= 1e-9, f"10^3 slots, max(gridded - gain-grid) = {worst:.3g}", el, 30)
    assert ok


def test_3_qos_and_stability(report):
    t = time.perf_counter()
    cfg = reference_config(4, n_slots=100_000, seed=SEED)
    records, s = run(cfg, "free_bs")
    flags = check_stability(records, 1e-2)
    el = time.perf_counter() - t
    dr_ok = bool(np.all(s.delivery_ratio >= 0.89))
    detail = (
        f"min delivery {s.delivery_ratio.min():.4f}, max Y(K)/K {s.queue_drift_y.max():.2e}, "
        f"Z(K)/K {s.queue_drift_z:.6f}, stable {flags.tolist()}"
    )
    ok = report(3, dr_ok and bool(flags.all()), detail, el, 60)
    assert ok


def test_4_v_trend(report):
    t = time.perf_counter()
    vs = [10.0, 100.0, 1000.0]
    cfg = reference_config(4, n_slots=V_SWEEP_SLOTS, seed=SEED)
    res = run_sweep(cfg, SweepSpec("control_v", vs, REPS, ("free_bs",)), workers=1)
    st = _paired_stats(res)
    means = [st[("free_bs", v)].mean() for v in vs]
    d1 = st[("free_bs", vs[1])] - st[("free_bs", vs[0])]
    d2 = st[("free_bs", vs[2])] - st[("free_bs", vs[1])]
    # non-decreasing within the paired replication standard error
    nondecreasing = d1.mean() >= -_se(d1) and d2.mean() >= -_se(d2)
    diminishing = d2.mean() < d1.mean()
    el = time.perf_counter() - t
    detail = (
        "means " + ", ".join(f"V={v:g}: {m:.5f}" for v, m in zip(vs, means))
        + f"; gains {d1.mean():.2e} then {d2.mean():.2e}"
    )
    ok = report(4, nondecreasing and diminishing, detail, el, 300)
    assert ok


def test_5_power_sweep(report):
    t = time.perf_counter()
    powers = [5.0, 10.0, 15.0, 20.0]
    cfg = reference_config(4, n_slots=SWEEP_SLOTS, seed=SEED)
    res = run_sweep(cfg, SweepSpec("power_db", powers, REPS), workers=1)
    st = _paired_stats(res)
    fb = [st[("free_bs", p)].mean() for p in powers]
    bl = [st[("baseline", p)].mean() for p in powers]
    above = all(f > b for f, b in zip(fb, bl))
    ratio = fb[-1] / bl[-1]
    el = time.perf_counter() - t
    detail = (
        "free_bs/baseline " + ", ".join(f"{p:g}dB: {f:.4f}/{b:.4f}" for p, f, b in zip(powers, fb, bl))
        + f"; ratio at 20 dB = {ratio:.3f} (need >= 1.5)"
    )
    ok = report(5, above and ratio >= 1.5, detail, el, 300)
    assert ok


def test_6_user_sweep(report):
    t = time.perf_counter()
    ns = [2, 4, 8, 12, 16, 20]
    cfg = reference_config(4, n_slots=SWEEP_SLOTS, seed=SEED)
    res = run_sweep(cfg, SweepSpec("n_users", ns, REPS), workers=1)
    st = _paired_stats(res)
    tp = _paired_stats(res, "throughput")
    fb = np.array([st[("free_bs", n)].mean() for n in ns])
    bl_ok = True
    for a, b in zip(ns, ns[1:]):
        diff = st[("baseline", b)] - st[("baseline", a)]
        bl_ok &= diff.mean() <= _se(diff)
    peak = int(np.argmax(fb))
    interior = 0 < peak < len(ns) - 1
    el = time.perf_counter() - t
    detail = (
        "offloading free_bs " + " ".join(f"{n}:{v:.4f}" for n, v in zip(ns, fb))
        + " | baseline " + " ".join(f"{n}:{st[('baseline', n)].mean():.4f}" for n in ns)
        + " | throughput free_bs " + " ".join(f"{n}:{tp[('free_bs', n)].mean():.3f}" for n in ns)
        + f" | baseline non-increasing={bool(bl_ok)}, free_bs peak at N={ns[peak]} (interior={interior})"
    )
    ok = report(6, bool(bl_ok) and interior, detail, el, 600)
    assert ok


def test_7_trace_determinism(report, tmp_path):
    t = time.perf_counter()
    cfg = reference_config(4, n_slots=20_000, seed=SEED)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    codes = [main(["run", "--config", str(path), "--seed", "7", "--trace", str(p), "--summary", str(p) + ".json"]) for p in (a, b)]
    same = a.read_bytes() == b.read_bytes()
    el = time.perf_counter() - t
    ok = report(7, codes == [0, 0] and same, f"exit codes {codes}, traces identical={same}", el, 60)
    assert ok


def test_8_unit_properties(report):
    t = time.perf_counter()
    rng = np.random.default_rng(SEED)
    checks = {}

    # 10^6 queue updates: 1000 independent queues x 1000 steps
    y = np.zeros(1000)
    z = np.zeros(1000)
    q = rng.uniform(0, 1, 1000)
    ok_q = True
    for _ in range(1000):
        a = rng.random(1000) < 0.7
        dec = rng.random(1000) < 0.6
        r = (rng.random(1000) < 0.5).astype(float)
        mu2 = rng.uniform(0, 1, 1000)
        y2 = update_user_queue(y, a, q, dec)
        z2 = update_z_queue(z, r, mu2)
        ok_q &= bool(np.all(y2 >= 0) and np.all(z2 >= 0))
        ok_q &= bool(np.all(np.abs(y2 - y) <= np.maximum(q, 1) + 1e-12))
        ok_q &= bool(np.all(np.abs(z2 - z) <= 1 + 1e-12))
        y, z = y2, z2
    checks["queues"] = ok_q

    grid = np.logspace(-5, 2, 1000)
    err = max(
        float(np.max(np.abs(threshold_from_rate(100.0, rate_from_threshold(100.0, grid, b), b) - grid)))
        for b in (2, np.e)
    )
    checks["roundtrip"] = err < 1e-12

    cfg = reference_config(4, n_slots=5000, seed=SEED)
    worst9 = 0.0
    for sched in ("free_bs", "baseline", "brute_force"):
        records, _ = run(cfg, sched)
        worst9 = max(worst9, max(abs(r.mu1 + r.mu2 - cfg.slot_duration) for r in records))
        checks.setdefault("nonneg durations", True)
        checks["nonneg durations"] &= all(r.mu1 >= 0 and r.mu2 >= 0 for r in records)
    checks["mu1 + mu2 = T"] = worst9 <= 1e-12

    scale_ok = True
    for cfg_i, gains, queues in _random_slots(1000, SEED + 2):
        c = float(rng.uniform(0.1, 10))
        scaled = VirtualQueueState(queues.y * c, queues.z * c)
        for decide in (free_bs_decide, baseline_decide):
            d1 = decide(gains, queues, True, cfg_i)
            d2 = decide(gains, scaled, True, cfg_i)
            scale_ok &= abs(d2.objective - c * d1.objective) <= 1e-9 * max(1.0, abs(d2.objective))
            scale_ok &= (d1.phase1_threshold, d1.relay) == (d2.phase1_threshold, d2.relay)
    checks["scaling invariance"] = scale_ok

    el = time.perf_counter() - t
    detail = ", ".join(f"{k}={'ok' if v else 'FAILED'}" for k, v in checks.items())
    detail += f"; roundtrip err {err:.1e}, max |mu1+mu2-T| {worst9:.1e}"
    ok = report(8, all(checks.values()), detail, el, 60)
    assert ok
