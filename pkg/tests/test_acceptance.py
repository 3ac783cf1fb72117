"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` to see the lines inline;
they are also collected into the terminal summary.
"""
import json
import math

import numpy as np
import pytest

from szilard import cli
from szilard.core import EngineConfig, shannon_entropy, trial_generator
from szilard.engine_a import evaluate
from szilard.engine_b import RodConfig, run_cycle_b, work_closed_form_b
from szilard.ensemble import (
    EnsembleSpec,
    exact_mean_abs_imbalance,
    exact_mean_work,
    loglog_slope,
    run_ensemble,
)
from szilard.entropy import Decomposition, partitioned_entropy
from szilard.gas import (
    GasState,
    isothermal_work,
    kinetic_mean_work_a,
    measure_pressure,
    quasistatic_piston_work,
    split_counts,
    window_for,
)
from szilard.switch import (
    DoubleWellSim,
    TwoStateSwitch,
    arrhenius_slope,
    information_lifetime,
    min_switch_work,
    simulate_escape_time,
)

pytestmark = pytest.mark.acceptance


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-15)


def test_c1_closed_form_vs_quadrature(record):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 10_001))
        cfg = EngineConfig(n)
        res = evaluate(cfg, cfg.outcome(int(rng.integers(0, n + 1))))
        err = abs(res.work_closed_form - res.work_quadrature) / max(res.work_closed_form, 1e-15)
        worst = max(worst, err)
    ok = worst <= 1e-8
    record(1, ok, f"max relative gap {worst:.2e} over 1000 pairs (tol 1e-8)")
    assert ok


def test_c2_model_b_ledger(record):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 10_001))
        nr = int(rng.integers(0, n + 1))
        cfg = EngineConfig(n)
        # keep compression lengths well inside the half box: K > 16 N kT / L^2
        k = 10 ** rng.uniform(math.log10(16 * n) + 0.5, math.log10(16 * n) + 6)
        o = cfg.outcome(nr)
        worst = max(worst, rel_err(run_cycle_b(cfg, RodConfig(k), o).net_work,
                                   work_closed_form_b(cfg, o)))
    k_worst = 0.0
    for n, nr in ((100, 60), (1000, 999), (37, 1), (10_000, 5_100)):
        cfg = EngineConfig(n)
        o = cfg.outcome(nr)
        base = 16 * n * 10
        ws = [run_cycle_b(cfg, RodConfig(base * 10**j), o).net_work for j in range(5)]
        k_worst = max(k_worst, max(rel_err(w, ws[0]) for w in ws))
    ok = worst <= 1e-10 and k_worst <= 1e-10
    record(2, ok, f"ledger vs closed form {worst:.2e}, K spread over 4 decades {k_worst:.2e} "
                  "(tol 1e-10)")
    assert ok


def test_c3_order_one_mean_work(record):
    vals = {(m, n): exact_mean_work(EngineConfig(n), m)
            for m in ("A", "B") for n in (10**2, 10**3, 10**4, 10**5)}
    in_range = all(0.1 <= v <= 1.0 for v in vals.values())
    near = all(rel_err(v, 0.5 if m == "A" else 0.375) <= 0.02
               for (m, n), v in vals.items() if n >= 10**4)
    zs = []
    for m in ("A", "B"):
        for n in (100, 10_000):
            s = run_ensemble(EnsembleSpec(EngineConfig(n), m, 10**6, master_seed=31))
            zs.append(abs(s.z_score))
    ok = in_range and near and max(zs) <= 5
    record(3, ok, "exact means "
           + ", ".join(f"{m}{n:.0e}={v:.5f}" for (m, n), v in vals.items())
           + f"; max |z| of 1e6-trial MC {max(zs):.2f}")
    assert ok


def test_c4_imbalance_scaling(record):
    ns = np.unique(np.logspace(2, 6, 17).astype(int))
    slope = loglog_slope(ns, [exact_mean_abs_imbalance(int(n)) for n in ns])
    ok = abs(slope + 0.5) <= 0.05
    record(4, ok, f"log-log slope {slope:.4f} (target -0.5 +- 0.05)")
    assert ok


def test_c5_entropy_decomposition(record):
    rng = np.random.default_rng(5)
    worst = 0.0
    mono = True
    for _ in range(1000):
        m = int(rng.integers(1, 65))
        w = rng.exponential(size=m) * (rng.random(m) > 0.2)
        if w.sum() == 0:
            w[0] = 1.0
        d = Decomposition(tuple(w / w.sum()), float(rng.uniform(-20, 20)))
        gap = abs((d.base_entropy - partitioned_entropy(d)) - shannon_entropy(d.fractions))
        worst = max(worst, gap)
        finer = d.refine(int(rng.integers(0, m)), float(rng.random()))
        mono &= finer.information >= d.information - 1e-12
    ok = worst <= 1e-12 and mono
    record(5, ok, f"max |S - S' - I| {worst:.1e}; refinement monotone on 1000: {mono}")
    assert ok


def test_c6_switch(record):
    exact_ok = True
    bound_ok = True
    for eps in np.concatenate([np.logspace(-12, math.log10(0.05), 200), [0.5]]):
        eps = float(eps)
        exact_ok &= min_switch_work(eps) == pytest.approx(math.log(1 / eps), rel=1e-15)
        exact_ok &= information_lifetime(TwoStateSwitch(0.0, 1.0, 2.5), eps) == pytest.approx(
            2.5 / eps, rel=1e-15)
        if eps <= 0.05:
            lead, two = min_switch_work(eps), min_switch_work(eps, exact=True)
            bound_ok &= abs(lead - two) / lead <= 2 * eps
    barriers = [3.0, 4.0, 5.0, 6.0]
    res = [simulate_escape_time(DoubleWellSim.fixed_curvature(eb, timestep=2e-3), 1000, seed=60)
           for eb in barriers]
    slope = arrhenius_slope(barriers, [r.mean_first_passage for r in res])
    ok = exact_ok and bound_ok and abs(slope - 1.0) <= 0.15
    record(6, ok, f"formulas exact: {exact_ok}; 2-eps bound: {bound_ok}; Arrhenius slope "
                  f"{slope:.3f} over Eb 3-6 with 1000 escapes each (target 1 +- 0.15)")
    assert ok


def test_c7_gas_oracle(record):
    ratios = []
    for n in (100, 1000):
        for length in (0.5, 1.0, 2.0):
            rng = trial_generator(70, n + int(10 * length))
            g = GasState.equilibrium(n, length, rng)
            p = measure_pressure(g, window_for(g, 4_000_000), rng)
            ratios.append(p * length / n)
    pressure_ok = all(abs(r - 1) <= 0.01 for r in ratios)
    piston = []
    for ratio in (0.25, 0.5, 2.0, 4.0):
        rng = trial_generator(71, int(100 * ratio))
        g = GasState.equilibrium(100, 1.0, rng)
        w = quasistatic_piston_work(g, 1.0 / ratio, 1000, rng)
        piston.append(rel_err(w, isothermal_work(100, 1.0, 1.0 / ratio)))
    piston_ok = max(piston) <= 0.02
    n, samples = 10_000, 400
    c = split_counts(n, 1.0, samples, trial_generator(72, 0))
    z_mean = (c.mean() - n / 2) / math.sqrt(n / 4 / samples)
    z_var = (c.var(ddof=1) - n / 4) / (n / 4 * math.sqrt(2 / (samples - 1)))
    split_ok = abs(z_mean) <= 5 and abs(z_var) <= 5
    ok = pressure_ok and piston_ok and split_ok
    record(7, ok, f"pL/NkT in [{min(ratios):.4f}, {max(ratios):.4f}]; piston max rel err "
                  f"{max(piston):.4f}; split z mean {z_mean:.2f}, var {z_var:.2f}")
    assert ok


def test_c8_kinetic_end_to_end(record):
    est = kinetic_mean_work_a(100, 20_000, seed=8)
    exact = exact_mean_work(EngineConfig(100), "A")
    err = rel_err(est.mean_work, exact)
    ok = err <= 0.05
    record(8, ok, f"kinetic {est.mean_work:.4f} +- {est.std_error:.4f} vs exact {exact:.4f} "
                  f"({100 * err:.2f}%, tol 5%, {est.distinct_splits} distinct splits)")
    assert ok


REPLAY_RUNS = [
    ["model-a", "--n", "100", "--sample", "--seed", "7"],
    ["model-b", "--n", "100", "--n-right", "60", "--k", "1e6", "--format", "csv"],
    ["ensemble", "--model", "A", "--n-sweep", "100,1000,10000", "--trials", "150000", "--seed", "9"],
    ["entropy", "--lambdas", "0.2,0.3,0.5"],
    ["switch", "--eps", "0.01", "--escape-barriers", "2,3", "--trials", "200", "--seed", "4"],
    ["gas", "piston-work", "--n", "50", "--final-l", "0.5", "--steps", "100", "--seed", "3"],
    ["gas", "split-stats", "--n", "1000", "--samples", "200", "--seed", "3", "--format", "csv"],
]


def test_c9_replay_bitwise(record, tmp_path, capsys):
    mismatches = []
    for i, argv in enumerate(REPLAY_RUNS):
        out = tmp_path / f"run{i}.out"
        assert cli.main(argv + ["--threads", "1", "--output", str(out)]) == 0
        original = out.read_bytes()
        manifest = str(out) + ".manifest.json"
        json.loads(open(manifest).read())
        for threads in ("1", "2", "5"):
            again = tmp_path / f"run{i}_{threads}.out"
            assert cli.main(["replay", manifest, "--threads", threads, "--output", str(again)]) == 0
            if again.read_bytes() != original:
                mismatches.append((argv[0], threads))
    capsys.readouterr()
    ok = not mismatches
    record(9, ok, f"{len(REPLAY_RUNS)} invocations replayed at 1/2/5 threads; "
                  f"mismatches: {mismatches or 'none'}")
    assert ok
