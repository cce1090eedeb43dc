"""Acceptance gate: ten end-to-end checks, one PASS/FAIL line each.

Every statistical check runs at a fixed seed; the block/substream layout
makes the outcome reproducible bit for bit, so each line is stable across
machines and thread counts.  Lines are collected in RESULTS and echoed in
the terminal summary by conftest.

Criterion 2 is expected to FAIL on the current engine: the depth table it
checks against is a set of published reference depths that the closed-form
machinery here does not reproduce at nonzero propagation delay (it does at
zero delay).  The check is kept failing rather than widened; see the table
test for the cell-by-cell diff.
"""

import io
import json
import math
import time
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
import pytest

from naklab import balance, bounds, sim, throughput
from naklab.cli import main as cli_main
from naklab.probability import (
    DiscreteCdf,
    couple_extremal,
    minimize_phi,
    wilson_interval,
)
from naklab.renewal import MiningParams, peak_lead_pmf

from test_probability import attained_mass

RESULTS: list[str] = []

Z99 = 2.5758293035489004
SEED = 2026
BTC25 = MiningParams.from_split(0.25, 1.0 / 600.0, 10.0)


def _report(ok: bool, name: str, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    if not ok:
        pytest.fail(line, pytrace=False)


def _sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def test_01_balanced_height_tail():
    """Balanced-height tail at Bitcoin scale: 1-F(0) and 1-F(1), under 1 ms."""
    targets = {0: 0.006, 1: 0.0001}
    vals = {n: float(balance.tie_tail(BTC25, n)) for n in targets}
    reps = 200
    tic = time.perf_counter()
    for _ in range(reps):
        balance.tie_tail(BTC25, 0)
        balance.tie_tail(BTC25, 1)
    per_eval = (time.perf_counter() - tic) / (2 * reps)
    rel = {n: abs(vals[n] - t) / t for n, t in targets.items()}
    ok = all(r <= 0.25 for r in rel.values()) and per_eval < 1e-3
    _report(ok, "criterion 1 (balanced-height tail)",
            f"1-F(0)={vals[0]:.6f} vs 0.006 ({rel[0]:.1%}), "
            f"1-F(1)={vals[1]:.6f} vs 0.0001 ({rel[1]:.1%}), "
            f"tol 25%, {per_eval * 1e6:.0f} us/eval (< 1 ms)")


def test_02_confirmation_depth_table():
    """Depth table at 1e-3 risk vs the reference depths (expected FAIL).

    The engine's closed forms agree with the reference at zero propagation
    delay but land on different depths at delay 10 s; the direct attack
    simulation sides with the engine's numbers.  Kept failing on purpose
    instead of loosening the tolerance.
    """
    anchors = {0.1: (7, 6), 0.2: (14, 13), 0.3: (35, 32), 0.4: (161, 122)}
    tic = time.perf_counter()
    rows = bounds.depth_table(1.0 / 600.0, 10.0, list(anchors), 1e-3)
    elapsed = time.perf_counter() - tic
    cells = []
    ok = elapsed < 600.0
    for row in rows:
        up_ref, lo_ref = anchors[row["beta"]]
        tol = 3 if row["beta"] == 0.4 else 1
        for label, got, ref in (("upper", row["k_upper"], up_ref),
                                ("lower", row["k_lower"], lo_ref)):
            hit = abs(got - ref) <= tol
            ok &= hit
            cells.append(f"{label}@{row['beta']:.0%} {got} vs {ref}"
                         f"{'' if hit else ' MISS'}")
    _report(ok, "criterion 2 (confirmation-depth table)",
            f"tol +-1 (+-3 at 40%), {elapsed:.1f}s: " + ", ".join(cells))


def test_03_fault_tolerance_boundary():
    got = bounds.beta_star(1.0 / 600.0, 10.0)
    ok = abs(got - 0.498) <= 1e-3
    _report(ok, "criterion 3 (fault-tolerance boundary)",
            f"beta_star={got:.6f} vs 0.498 +- 0.001")


def test_04_throughput_cap_and_delay():
    cap = throughput.throughput_rate_cap(0.4, 178.6)
    d16 = throughput.delay_of_block(1600.0, 178.6, 0.9)
    d02 = throughput.delay_of_block(200.0, 178.6, 0.9)
    ok = (abs(cap - 81.0) <= 1.0
          and abs(d16 - 10.0) / 10.0 <= 0.02
          and abs(d02 - 2.0) / 2.0 <= 0.02)
    _report(ok, "criterion 4 (throughput cap and delay model)",
            f"rate_cap(0.4, 178.6)={cap:.2f} KB/s vs 81 +- 1; "
            f"delay(1600)={d16:.3f}s vs 10 +- 2%, delay(200)={d02:.3f}s vs 2 +- 2%")


def test_05_series_identities_grid():
    """Head coefficient, residual, and escape-probability identity on a
    9-point parameter grid."""
    worst_head = worst_escape = worst_resid = 0.0
    for beta in (0.1, 0.25, 0.4):
        for lam, delta in ((1.0 / 600.0, 10.0), (1.0 / 600.0, 40.0),
                           (1.0 / 13.0, 2.0)):
            p = MiningParams.from_split(beta, lam, delta)
            ser = peak_lead_pmf(p)
            a, h, d = p.adv_rate, p.hon_rate, p.delay
            head = 1.0 - a * (1.0 + h * d) / h
            worst_head = max(worst_head, abs(ser.coeffs[0] - head))
            worst_resid = max(worst_resid, ser.residual)
            delta_esc = balance.tie_params(p).absorb
            worst_escape = max(worst_escape,
                               abs(ser.coeffs[0] * math.exp(-a * d) - delta_esc))
    ok = worst_head <= 1e-12 and worst_resid < 1e-10 and worst_escape <= 1e-12
    _report(ok, "criterion 5 (series identities, 9-point grid)",
            f"max |e0 - closed form|={worst_head:.2e} (<=1e-12), "
            f"max residual={worst_resid:.2e} (<1e-10), "
            f"max |e0*exp(-a*delta) - escape|={worst_escape:.2e} (<=1e-12)")


def test_06_simulation_formula_agreement():
    """Sampled peak-excess pmf vs series head at 1e5 trials, and chain-sim
    cdf vs closed form at 1e7 trials, each within 99% CIs."""
    tic = time.perf_counter()
    hist = sim.sim_max_diff(sim.SimConfig(params=BTC25, trials=100_000, seed=SEED))
    t_pmf = time.perf_counter() - tic
    coeffs = peak_lead_pmf(BTC25).coeffs
    miss_pmf = []
    for i in range(6):
        lo, hi = wilson_interval(hist.counts.get(i, 0), hist.trials, Z99)
        if not lo <= coeffs[i] <= hi:
            miss_pmf.append(i)

    tic = time.perf_counter()
    res = balance.simulate_chain(BTC25, trials=10_000_000, seed=SEED)
    t_chain = time.perf_counter() - tic
    cum = np.cumsum(res.counts)
    miss_cdf = []
    for n in range(4):
        c = int(cum[n]) if n < len(cum) else res.trials
        lo, hi = wilson_interval(c, res.trials, Z99)
        if not lo <= float(balance.tie_cdf(BTC25, n)) <= hi:
            miss_cdf.append(n)

    ok = not miss_pmf and not miss_cdf and t_pmf < 300.0 and t_chain < 300.0
    _report(ok, "criterion 6 (simulation vs formulas)",
            f"peak-excess pmf i<=5 in 99% CIs at 1e5 trials "
            f"({t_pmf:.1f}s){' misses ' + str(miss_pmf) if miss_pmf else ''}; "
            f"chain cdf n<=3 in 99% CIs at 1e7 trials "
            f"({t_chain:.1f}s){' misses ' + str(miss_cdf) if miss_cdf else ''}")


def test_07_bound_sandwich_grid():
    """Attack simulation between lower and upper bounds on a 3 x 12 grid for
    both confirmation rules, plus bound ordering and the height-bookkeeping
    invariant.  The 3-sigma slack uses the binomial sigma at the bound value
    (an empirical sigma collapses to zero whenever no trial succeeds)."""
    trials = 4000
    tic = time.perf_counter()
    bad = []
    for beta in (0.1, 0.2, 0.3):
        p = MiningParams.from_split(beta, 1.0 / 13.0, 2.0)
        ser = peak_lead_pmf(p)
        for k in range(1, 13):
            est = sim.sim_private_attack_depth(
                sim.SimConfig(params=p, trials=trials, seed=SEED), k,
                lead="geometric")
            lo = float(bounds.depth_lower(p, k, series=ser).value)
            up = float(bounds.depth_upper(p, k, series=ser).value)
            ch = float(bounds.chernoff_depth_bound(p, k).value)
            if not (lo - 3 * _sigma(lo, trials)
                    <= est.p_hat <= up + 3 * _sigma(up, trials)):
                bad.append(f"depth beta={beta} k={k}")
            if up > ch + 1e-12:
                bad.append(f"order beta={beta} k={k}")
        for j in range(1, 13):
            t = 65.0 * j
            est = sim.sim_private_attack_time(
                sim.SimConfig(params=p, trials=trials, seed=SEED), t,
                lead="geometric")
            lo = float(bounds.time_lower(p, t, series=ser).value)
            up = float(bounds.time_upper(p, t, series=ser).value)
            if not (lo - 3 * _sigma(lo, trials)
                    <= est.p_hat <= up + 3 * _sigma(up, trials)):
                bad.append(f"time beta={beta} t={t}")
    lemma = sim.jumper_pacer_check(BTC25, events=1_000_000, seed=0)
    elapsed = time.perf_counter() - tic
    ok = not bad and lemma["violations"] == 0
    _report(ok, "criterion 7 (bound sandwich)",
            f"72 grid points, 3 beta x 12 depths + 12 waits at {trials} trials: "
            f"{len(bad)} violations{' ' + '; '.join(bad) if bad else ''}; "
            f"height-bookkeeping violations={lemma['violations']}/1e6 events; "
            f"{elapsed:.1f}s")


def test_08_beyond_tolerance_attack_wins():
    """Majority-pace adversary: success rate stays >= 0.99 as the horizon
    grows, the almost-sure-violation direction."""
    p = MiningParams.from_split(0.55, 1.0 / 13.0, 2.0)
    tic = time.perf_counter()
    p_hats = []
    for horizon in (300.0, 1_000.0, 5_000.0, 50_000.0):
        est = sim.sim_private_attack_depth(
            sim.SimConfig(params=p, trials=2000, seed=SEED, horizon=horizon),
            6, lead=0)
        p_hats.append(est.p_hat)
    elapsed = time.perf_counter() - tic
    monotone = all(b >= a - 1e-12 for a, b in zip(p_hats, p_hats[1:]))
    ok = p_hats[-1] >= 0.99 and monotone and elapsed < 120.0
    _report(ok, "criterion 8 (beyond-tolerance attack)",
            f"p_hat over growing horizons={p_hats} (final >= 0.99), "
            f"{elapsed:.1f}s (< 120 s)")


def _rand_cdf(g) -> DiscreteCdf:
    width = int(g.integers(1, 9))
    origin = int(g.integers(-5, 6))
    w = g.integers(1, 10, size=width).astype(float)
    return DiscreteCdf.from_pmf(origin, w / w.sum())


def test_09_coupling_attains_split_bound():
    """The extremal coupling hits the split bound exactly (breakpoint
    enumeration) and preserves both marginals under a DKW sup test."""
    g = np.random.default_rng(SEED)
    eps = math.sqrt(math.log(2.0 / 1e-4) / (2.0 * 1_000_000))
    worst_gap = worst_sup = 0.0
    for _ in range(10):
        cx, cy = _rand_cdf(g), _rand_cdf(g)
        a_star, val = minimize_phi(cx, cy)
        got = attained_mass(cx, cy, a_star)
        worst_gap = max(worst_gap, abs(got - min(val, 1.0)))
        u = g.random(1_000_000)
        xs, ys = couple_extremal(cx, cy, a_star, u)
        for cdf, samp in ((cx, xs), (cy, ys)):
            vals = np.arange(cdf.origin, cdf.origin + len(cdf.cdf))
            emp = np.searchsorted(np.sort(samp), vals, side="right") / len(samp)
            worst_sup = max(worst_sup, float(np.max(np.abs(
                emp - np.asarray(cdf.cdf)))))
    ok = worst_gap <= 1e-10 and worst_sup <= eps
    _report(ok, "criterion 9 (coupling attainability)",
            f"10 random pairs: max |attained - bound|={worst_gap:.2e} "
            f"(<=1e-10); DKW sup distance={worst_sup:.5f} "
            f"(<= {eps:.5f} at 1e6 samples)")


def test_10_simulate_outputs_thread_invariant(tmp_path, monkeypatch):
    """Byte-identical JSON from every simulate subcommand across thread
    counts."""
    fast = ["--lambda", "1/13", "--beta", "0.25", "--delta", "2"]
    runs = {
        "max-diff": ["simulate", "max-diff", *fast, "--trials", "5000",
                     "--seed", "5", "--format", "json"],
        "lead": ["simulate", "lead", *fast, "--warmup", "20000",
                 "--trials", "5000", "--seed", "5", "--format", "json"],
        "attack-depth": ["simulate", "attack-depth", *fast, "-k", "3",
                         "--lead-dist", "geometric", "--trials", "5000",
                         "--seed", "5"],
        "attack-time": ["simulate", "attack-time", *fast, "-t", "130",
                        "--lead-dist", "geometric", "--trials", "5000",
                        "--seed", "5"],
        "invariants": ["simulate", "invariants", *fast, "--events", "50000"],
    }
    differing = []
    for name, args in runs.items():
        blobs = []
        for threads in ("1", "7"):
            monkeypatch.setenv("NAKLAB_THREADS", threads)
            target = tmp_path / f"{name}-{threads}.json"
            buf = io.StringIO()
            with redirect_stdout(buf), redirect_stderr(buf):
                code = cli_main(args + ["-o", str(target)])
            assert code == 0, buf.getvalue()
            blobs.append(target.read_bytes())
        if blobs[0] != blobs[1]:
            differing.append(name)
        json.loads(blobs[0])   # emitted files are valid JSON
    ok = not differing
    _report(ok, "criterion 10 (thread-count determinism)",
            "all 5 simulate subcommands byte-identical across "
            f"NAKLAB_THREADS=1 and 7{'; differs: ' + str(differing) if differing else ''}")
