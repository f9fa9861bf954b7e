"""Acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line at the stated tolerance; the lines
are collected again in the pytest terminal summary. Monte-Carlo checks use
seed 0 of the experiment harness.
"""

import math

import numpy as np

from conftest import crandn
from das_ee.channel import DasTopology, assemble, draw_channel, draw_user_position
from das_ee.harness import ExperimentConfig, draw_rng, run_convergence_trace, run_rate_sweep, run_rau_sweep, summarize, write_csv
from das_ee.numerics import is_psd
from das_ee.selection import Strategy
from das_ee.solver import (
    PowerModel,
    inner_waterfill,
    miso_mrt_covariance,
    solve_ee_fixed_set,
    solve_p1,
    solve_p2,
    waterfill_modes,
)

LN2 = math.log(2.0)


def reference_instances(count, seed, receive=4, rau_counts=(1, 2, 3, 4)):
    """Channels of the reference setup with a random number of active RAUs."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.choice(rau_counts))
        top = DasTopology.standard(n)
        ch = draw_channel(top, draw_user_position(top.cell_radius_m, rng), receive, rng)
        full = tuple(range(n))
        yield assemble(ch, full), PowerModel(top.power_limit_w, top.antennas_per_rau, top.circuit_power_w(full), top.bandwidth_hz)


def test_01_grid_oracle(criterion):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        h = crandn(rng, 1, 2) * np.sqrt(10 ** rng.uniform(-1, 3, 2))
        limits = tuple(rng.uniform(0.1, 10.0, 2))
        sol = solve_p1(h, PowerModel(limits, (1, 1)))
        a = np.abs(h[0])
        p1 = np.linspace(0.0, limits[0], 200)[:, None]
        p2 = np.linspace(0.0, limits[1], 200)[None, :]
        oracle = np.log2(1 + (a[0] * np.sqrt(p1) + a[1] * np.sqrt(p2)) ** 2).max()
        worst = max(worst, abs(sol.rate_bps_hz - oracle) / oracle)
    criterion(1, "rate vs 200x200 MRT power grid", worst <= 1e-3, f"max rel err {worst:.2e} (tol 1e-3)")


def test_02_waterfill_kkt(criterion):
    rng = np.random.default_rng(1)
    kkt = recon = 0.0
    psd = True
    for _ in range(1000):
        n, m = rng.integers(1, 5), rng.integers(1, 9)
        h = crandn(rng, n, m) * np.sqrt(10 ** rng.uniform(-1, 2))
        w = 10 ** rng.uniform(-1, 1, m)
        q = inner_waterfill(h, np.diag(w))
        psd &= is_psd(q)
        # independent path: full eigh of the weighted Gram matrix
        g = h / np.sqrt(w)[None, :]
        d, u = np.linalg.eigh(g.conj().T @ g)
        b_half = np.sqrt(w)[:, None]
        modes = np.real(np.einsum("im,ij,jm->m", u.conj(), b_half * q * b_half.T, u))
        on = modes > 1e-8
        err_on = np.abs(modes[on] - (1 / LN2 - 1 / d[on])).max(initial=0.0)
        err_off = np.maximum(d[~on] - LN2, 0.0).max(initial=0.0)
        kkt = max(kkt, err_on, err_off)
        p = np.where(d > LN2, 1 / LN2 - 1 / np.maximum(d, LN2), 0.0)
        v = u / np.sqrt(w)[:, None]
        recon = max(recon, np.abs((v * p) @ v.conj().T - q).max())
        u2, _, p2 = waterfill_modes(h, w)
        v2 = u2 / np.sqrt(w)[:, None]
        recon = max(recon, np.abs((v2 * p2) @ v2.conj().T - q).max())
    ok = kkt <= 1e-8 and recon <= 1e-8 and psd
    criterion(2, "water-filling KKT", ok, f"KKT err {kkt:.1e}, reconstruction err {recon:.1e}, all PSD {psd} (tol 1e-8)")


def test_03_dinkelbach(criterion):
    worst_g = 0.0
    max_iters = 0
    monotone = True
    for h, power in reference_instances(200, 2):
        sol = solve_p2(h, power, record_trace=True)
        monotone &= bool(np.all(np.diff(sol.trace) >= 0))
        worst_g = max(worst_g, abs(sol.rate_bps_hz - sol.dual_eta * (sol.transmit_power_w + power.circuit_power_w)))
        max_iters = max(max_iters, sol.dinkelbach_iters)
    ok = monotone and worst_g <= 1e-5 and max_iters <= 15
    criterion(3, "Dinkelbach", ok, f"eta nondecreasing {monotone}, max |G| {worst_g:.1e} (tol 1e-5), max iters {max_iters} (cap 15)")


def test_04_power_price_below_ee(criterion):
    rng = np.random.default_rng(3)
    found = 0
    strict = True
    worst = 0.0
    for h, power in reference_instances(5000, 4):
        p1 = solve_p1(h, power)
        p2 = solve_p2(h, power, start=p1)
        if p1.rate_bps_hz - p2.rate_bps_hz <= 1e-3 * p1.rate_bps_hz:
            continue  # unconstrained optimum already at full power; never reaches bisection
        floor = p2.rate_bps_hz + rng.uniform(0.05, 0.95) * (p1.rate_bps_hz - p2.rate_bps_hz)
        sol = solve_ee_fixed_set(h, power, rate_min_bps_hz=floor, p1=p1, p2=p2)
        strict &= sol.bisection_iters > 0 and sol.dual_mu < sol.dual_eta
        worst = max(worst, abs(sol.rate_bps_hz - floor) / floor)
        found += 1
        if found == 200:
            break
    ok = found == 200 and strict and worst <= 1e-4
    criterion(4, "mu* < eta* on bisection instances", ok, f"{found} instances, strict {strict}, max rate err {worst:.1e} (tol 1e-4)")


def test_05_circuit_power_monotonicity(criterion):
    circuits = (1.0, 5.0, 25.0, 125.0, 625.0)
    ee_ok = rate_ok = True
    worst = 0.0
    for h, power in reference_instances(50, 5):
        sols = [solve_p2(h, power, circuit_power_w=c) for c in circuits]
        ee = [s.energy_efficiency_bits_per_joule for s in sols]
        rate = [s.rate_bps_hz for s in sols]
        ee_ok &= all(a > b for a, b in zip(ee, ee[1:]))
        rate_ok &= all(a <= b + 1e-5 for a, b in zip(rate, rate[1:]))  # R(x1) <= R(x2) + eps
        big = solve_p2(h, power, circuit_power_w=1e6).rate_bps_hz
        p1 = solve_p1(h, power).rate_bps_hz
        worst = max(worst, abs(big - p1) / p1)
    ok = ee_ok and rate_ok and worst <= 0.01
    criterion(5, "EE/rate vs circuit power", ok, f"EE strictly decreasing {ee_ok}, rate nondecreasing {rate_ok}, P_C=1e6 gap {worst:.1e} (tol 1e-2)")


def test_06_selection_dominance(criterion):
    cfg = ExperimentConfig(num_draws=200, strategies=(Strategy.DISTANCE, Strategy.EXHAUSTIVE))
    ee = {(r.draw, r.strategy): r.ee_bits_per_joule for r in run_rate_sweep(cfg)}
    ex = np.array([ee[(k, "Exhaustive")] for k in range(200)])
    di = np.array([ee[(k, "Distance")] for k in range(200)])
    dominance = bool(np.all(ex >= di))
    gap = float(np.mean((ex - di) / ex))
    ok = dominance and gap <= 0.03
    criterion(6, "exhaustive vs distance", ok, f"dominance on every draw {dominance}, mean gap {100 * gap:.2f}% (tol 3%)")


def test_07_rate_saturation(criterion):
    base = ExperimentConfig(num_draws=500, strategies=(Strategy.DISTANCE,))
    floor, step = 0.0, 250e6
    while True:
        rows = summarize(run_rate_sweep(ExperimentConfig(**{**base.__dict__, "rate_min_bps": (floor,)})))
        if rows[0]["feasible_fraction"] == 0.0 or floor > 1e11:
            break
        floor += step
    sat = rows[0]["mean_rate_bps"]
    ok = abs(sat - 504e6) <= 0.1 * 504e6
    criterion(7, "saturated rate", ok, f"{sat / 1e6:.1f} Mbit/s at floor {floor / 1e6:.0f} Mbit/s (target 504 +-10%)")


def test_08_single_rau_at_zero_floor(criterion):
    cfg = ExperimentConfig(num_draws=200, rau_counts=(2, 3, 4, 5, 6, 7), strategies=(Strategy.DISTANCE,))
    records = run_rau_sweep(cfg)
    frac = {i: np.mean([r.active_raus == 1 for r in records if r.rau_count == i]) for i in cfg.rau_counts}
    ok = min(frac.values()) >= 0.9
    detail = ", ".join(f"I={i}: {100 * f:.1f}%" for i, f in frac.items())
    criterion(8, "one RAU selected at zero floor", ok, f"{detail} (need >= 90% each)")


def test_09_convergence_envelopes(criterion):
    cfg = ExperimentConfig(trace_rau_counts=(2, 6, 10))
    worst = 0.0
    for seed in range(10):
        cfg_s = ExperimentConfig(trace_rau_counts=cfg.trace_rau_counts, seed=seed)
        pts = run_convergence_trace(cfg_s, "P1")
        for i in cfg.trace_rau_counts:
            series = [p.objective for p in pts if p.rau_count == i]
            at50 = series[min(50, len(series)) - 1]
            worst = max(worst, abs(series[-1] - at50) / series[-1])
    steps = 0
    for seed in range(10):
        pts = run_convergence_trace(ExperimentConfig(trace_rau_counts=cfg.trace_rau_counts, seed=seed), "P3")
        for i in cfg.trace_rau_counts:
            steps = max(steps, sum(p.rau_count == i for p in pts))
    ok = worst <= 1e-3 and steps <= 20
    criterion(9, "convergence envelopes", ok, f"P1 gap at iteration 50 {worst:.1e} (tol 1e-3), max bisection steps {steps} (cap 20)")


def test_10_miso_mrt(criterion):
    rng = np.random.default_rng(10)
    worst = closed = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        top = DasTopology.standard(n)
        ch = draw_channel(top, draw_user_position(top.cell_radius_m, rng), 1, rng)
        h = assemble(ch, range(n))
        sol = solve_p1(h, PowerModel(top.power_limit_w, top.antennas_per_rau))
        q = sol.covariance / np.trace(sol.covariance).real
        mrt = miso_mrt_covariance(h, np.repeat(sol.dual_lambda, top.antennas_per_rau), 1.0)
        worst = max(worst, np.abs(q - mrt / np.trace(mrt).real).max())
        v = np.concatenate([math.sqrt(p) * b.conj().ravel() / np.linalg.norm(b) for b, p in zip(ch.blocks, top.power_limit_w)])
        full = np.outer(v, v.conj())
        closed = max(closed, np.abs(q - full / np.trace(full).real).max())
    criterion(10, "MISO MRT form", worst <= 1e-6, f"max-norm err {worst:.1e} (tol 1e-6); full-power MRT err {closed:.1e}")


def test_11_reproducibility(criterion, tmp_path):
    from das_ee.cli import main

    cfg = tmp_path / "exp.cfg"
    cfg.write_text("num_draws = 3\nrate_min_bps = 0, 300e6\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["rate-sweep", "--config", str(cfg), "--seed", "7", "--out", str(a)]) == 0
    assert main(["rate-sweep", "--config", str(cfg), "--seed", "7", "--out", str(b)]) == 0
    same = a.read_bytes() == b.read_bytes()
    direct = write_csv(run_rate_sweep(ExperimentConfig(num_draws=3, rate_min_bps=(0.0, 300e6), seed=7))).encode() == a.read_bytes()
    criterion(11, "byte-identical CSV", same and direct, f"two CLI runs identical {same}, matches in-process run {direct}")
