"""Monte-Carlo estimators: determinism, degenerate cases, and agreement
with the analytic side at loose (3 sigma) statistical tolerances."""

import math

import numpy as np
import pytest

from naklab.bounds import depth_lower, depth_upper, time_lower, time_upper
from naklab.errors import DomainError, ParameterError
from naklab.renewal import MiningParams, peak_lead_pmf
from naklab.sim import (
    SimConfig,
    arrival_stats,
    jumper_pacer_check,
    sim_lead,
    sim_max_diff,
    sim_private_attack_depth,
    sim_private_attack_time,
)

Z3 = 3.2905267314919255  # two-sided 99.9%


def _sigma(p, n):
    return math.sqrt(max(p * (1.0 - p), 1e-12) / n)


class TestConfig:
    def test_validation(self, btc25):
        with pytest.raises(ParameterError):
            SimConfig(params=btc25, trials=0)
        with pytest.raises(ParameterError):
            SimConfig(params=btc25, horizon=0.0)
        with pytest.raises(ParameterError):
            SimConfig(params=btc25, warmup=-1.0)
        with pytest.raises(ParameterError):
            SimConfig(params=btc25, stop_margin=0)

    def test_warmup_window(self, btc25):
        assert SimConfig(params=btc25, warmup=123.0).warmup_window(1e6) == 123.0
        assert SimConfig(params=btc25).warmup_window(1e4) == pytest.approx(
            1e4 / btc25.total_rate, rel=1e-12)


class TestMaxDiff:
    def test_no_adversary_point_mass(self):
        cfg = SimConfig(params=MiningParams(0.0, 1.0 / 600.0, 10.0), trials=50)
        hist = sim_max_diff(cfg)
        assert hist.counts == {0: 50} and hist.truncated_trials == 0

    def test_out_of_tolerance_rejected(self):
        p = MiningParams.from_split(0.55, 1.0 / 600.0, 10.0)
        with pytest.raises(DomainError):
            sim_max_diff(SimConfig(params=p, trials=10))

    def test_matches_series_head(self, btc25):
        hist = sim_max_diff(SimConfig(params=btc25, trials=10_000, seed=11))
        assert sum(hist.counts.values()) == 10_000
        coeffs = peak_lead_pmf(btc25).coeffs
        for i in range(4):
            _, lo, hi = hist.point_estimate(i, z=Z3)
            assert lo <= coeffs[i] <= hi

    def test_thread_count_invisible(self, btc25, monkeypatch):
        cfg = SimConfig(params=btc25, trials=8192 + 61, seed=5)
        monkeypatch.setenv("NAKLAB_THREADS", "1")
        a = sim_max_diff(cfg)
        monkeypatch.setenv("NAKLAB_THREADS", "6")
        b = sim_max_diff(cfg)
        assert a.counts == b.counts and a.truncated_trials == b.truncated_trials

    def test_seed_changes_draws(self, fast25):
        a = sim_max_diff(SimConfig(params=fast25, trials=2000, seed=1))
        b = sim_max_diff(SimConfig(params=fast25, trials=2000, seed=2))
        assert a.counts != b.counts


class TestLead:
    def test_no_adversary_point_mass(self):
        cfg = SimConfig(params=MiningParams(0.0, 1.0 / 600.0, 10.0), trials=30)
        assert sim_lead(cfg).counts == {0: 30}

    def test_out_of_tolerance_rejected(self):
        p = MiningParams.from_split(0.55, 1.0 / 600.0, 10.0)
        with pytest.raises(DomainError):
            sim_lead(SimConfig(params=p, trials=10))

    def test_stationary_geometric_no_delay(self):
        # with zero delay the lead is a reflected walk with up/down ratio
        # a/h, so the stationary law is geometric(1 - a/h)
        p = MiningParams(0.25 / 13.0, 0.75 / 13.0, 0.0)
        hist = sim_lead(SimConfig(params=p, trials=2500, seed=3, warmup=26_000.0))
        rho = 1.0 / 3.0
        p0, lo, hi = hist.point_estimate(0, z=Z3)
        assert lo <= 1.0 - rho <= hi
        tail2 = sum(n for v, n in hist.counts.items() if v >= 2) / hist.trials
        assert abs(tail2 - rho ** 2) <= Z3 * _sigma(rho ** 2, hist.trials)


class TestAttackDepth:
    def test_validation(self, fast25):
        cfg = SimConfig(params=fast25, trials=10)
        with pytest.raises(ParameterError):
            sim_private_attack_depth(cfg, 0)
        with pytest.raises(ParameterError):
            sim_private_attack_depth(cfg, 2, lead="stationary")
        with pytest.raises(ParameterError):
            sim_private_attack_depth(cfg, 2, lead=-1)

    def test_geometric_lead_needs_minority(self):
        p = MiningParams.from_split(0.6, 1.0 / 13.0, 0.0)
        with pytest.raises(DomainError):
            sim_private_attack_depth(SimConfig(params=p, trials=10), 2,
                                     lead="geometric")

    def test_no_adversary_never_wins(self):
        p = MiningParams(0.0, 1.0 / 13.0, 2.0)
        est = sim_private_attack_depth(SimConfig(params=p, trials=100), 2, lead=0)
        assert est.successes == 0 and est.p_hat == 0.0

    def test_huge_lead_always_wins(self, fast25):
        est = sim_private_attack_depth(SimConfig(params=fast25, trials=100), 3,
                                       lead=3)
        assert est.p_hat == 1.0

    def test_bracketed_by_bounds(self, fast25):
        k = 3
        est = sim_private_attack_depth(
            SimConfig(params=fast25, trials=4000, seed=7), k, lead="geometric")
        lo = float(depth_lower(fast25, k).value)
        up = float(depth_upper(fast25, k).value)
        s = Z3 * _sigma(est.p_hat, est.trials)
        assert lo - s <= est.p_hat <= up + s

    def test_decreasing_in_depth(self, fast25):
        ps = [sim_private_attack_depth(
            SimConfig(params=fast25, trials=3000, seed=9), k, lead="geometric").p_hat
            for k in (1, 6)]
        assert ps[0] > ps[1] + Z3 * _sigma(ps[0], 3000)

    def test_lead_conventions_agree_without_delay(self):
        # warmup walk and direct geometric sample the same law at zero delay
        p = MiningParams(0.25 / 13.0, 0.75 / 13.0, 0.0)
        kw = dict(trials=3000, seed=13)
        pw = sim_private_attack_depth(
            SimConfig(params=p, warmup=26_000.0, **kw), 2, lead="warmup").p_hat
        pg = sim_private_attack_depth(
            SimConfig(params=p, **kw), 2, lead="geometric").p_hat
        assert abs(pw - pg) <= Z3 * math.sqrt(2.0) * _sigma(max(pw, pg), 3000)

    def test_majority_attacker_dominates(self):
        p = MiningParams.from_split(0.55, 1.0 / 13.0, 2.0)
        est = sim_private_attack_depth(SimConfig(params=p, trials=400, seed=1),
                                       6, lead=0)
        assert est.p_hat >= 0.95

    def test_horizon_truncation_reported(self, fast25):
        cfg = SimConfig(params=fast25, trials=200, seed=2, horizon=1000.0,
                        stop_margin=10_000)
        est = sim_private_attack_depth(cfg, 4, lead=0)
        assert est.truncated_trials > 0
        assert est.successes + est.truncated_trials <= est.trials

    def test_estimate_shape(self, fast25):
        est = sim_private_attack_depth(SimConfig(params=fast25, trials=500), 2,
                                       lead="geometric")
        lo, hi = est.ci95
        assert 0.0 <= lo <= est.p_hat <= hi <= 1.0
        d = est.as_dict()
        assert d["trials"] == 500 and d["ci95"] == [lo, hi]


class TestAttackTime:
    def test_validation(self, fast25):
        with pytest.raises(ParameterError):
            sim_private_attack_time(SimConfig(params=fast25, trials=10), -1.0)

    def test_bracketed_by_bounds(self, fast25):
        t = 20.0 * 13.0
        est = sim_private_attack_time(
            SimConfig(params=fast25, trials=4000, seed=21), t, lead="geometric")
        lo = float(time_lower(fast25, t).value)
        up = float(time_upper(fast25, t).value)
        s = Z3 * _sigma(est.p_hat, est.trials)
        assert lo - s <= est.p_hat <= up + s

    def test_decreasing_in_wait(self, fast25):
        kw = dict(trials=3000, seed=23)
        early = sim_private_attack_time(SimConfig(params=fast25, **kw), 10 * 13.0,
                                        lead="geometric").p_hat
        late = sim_private_attack_time(SimConfig(params=fast25, **kw), 80 * 13.0,
                                       lead="geometric").p_hat
        assert early > late + Z3 * _sigma(early, 3000)

    def test_thread_count_invisible(self, fast25, monkeypatch):
        cfg = SimConfig(params=fast25, trials=8192 + 17, seed=4)
        monkeypatch.setenv("NAKLAB_THREADS", "1")
        a = sim_private_attack_time(cfg, 130.0, lead="geometric")
        monkeypatch.setenv("NAKLAB_THREADS", "5")
        b = sim_private_attack_time(cfg, 130.0, lead="geometric")
        assert a.successes == b.successes and a.truncated_trials == b.truncated_trials


class TestJumperPacer:
    def test_no_violations(self, btc25, fast25):
        for p in (btc25, fast25):
            out = jumper_pacer_check(p, events=10_000, seed=0)
            assert out["violations"] == 0
            assert out["exact_match"] is None
            assert 0 < out["pacers"] <= out["jumpers"] <= out["events"]

    def test_exact_match_without_delay(self):
        p = MiningParams(0.25 / 13.0, 0.75 / 13.0, 0.0)
        out = jumper_pacer_check(p, events=5000, seed=1)
        assert out["violations"] == 0
        assert out["exact_match"] is True
        assert out["jumpers"] == out["pacers"] == out["events"]

    def test_validation(self, btc25):
        with pytest.raises(ParameterError):
            jumper_pacer_check(btc25, events=0)


class TestArrivalStats:
    def test_rates_within_noise(self, btc25):
        out = arrival_stats(btc25, span=1e6, seed=0)
        a, h = btc25.adv_rate, btc25.hon_rate
        assert abs(out["adv_rate_hat"] - a) <= Z3 * math.sqrt(a / 1e6)
        assert abs(out["hon_rate_hat"] - h) <= Z3 * math.sqrt(h / 1e6)
        assert abs(out["pacer_rate_hat"] - out["pacer_rate_theory"]) \
            <= Z3 * math.sqrt(out["pacer_rate_theory"] / 1e6)
        assert out["mean_pacer_gap_hat"] == pytest.approx(
            out["mean_pacer_gap_theory"], rel=0.1)
        assert out["mean_pacer_gap_theory"] == pytest.approx(810.0, rel=1e-12)

    def test_validation(self, btc25):
        with pytest.raises(ParameterError):
            arrival_stats(btc25, span=0.0)
