import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szilard.core import EngineConfig, TrialStream
from szilard.engine_a import (
    cycle_report,
    evaluate,
    max_shift,
    net_force,
    run_cycle_a,
    work_by_quadrature,
    work_closed_form,
    work_from_entropy,
)

# 100 (ln 2 - I(0.6, 0.4)), 30-digit mpmath evaluation
W_A_100_60 = 2.01355135506888734205127789688


def partial_work(cfg, o, y):
    """Analytic work integral from 0 to an arbitrary upper limit y."""
    n_maj = max(o.frac_right, o.frac_left)
    n_min = 1 - n_maj
    L = cfg.box_length
    return cfg.n_molecules * cfg.thermal_energy * (
        n_maj * math.log(1 + 2 * y / L) + n_min * math.log(1 - 2 * y / L))


def direct_force(cfg, o, x):
    n_maj = max(o.frac_right, o.frac_left)
    n_min = 1 - n_maj
    h = cfg.box_length / 2
    return cfg.n_molecules * cfg.thermal_energy * (n_maj / (h + x) - n_min / (h - x))


def test_force_balanced_is_zero():
    cfg = EngineConfig(10)
    assert net_force(cfg, cfg.outcome(5), 0.0) == 0.0


def test_force_example_and_finite_difference():
    cfg = EngineConfig(100, 1.0)
    o = cfg.outcome(60)
    assert net_force(cfg, o, 0.0) == pytest.approx(40.0, rel=1e-14)
    h = 1e-5
    fd = (partial_work(cfg, o, h) - partial_work(cfg, o, -h)) / (2 * h)
    assert fd == pytest.approx(40.0, rel=1e-8)


@pytest.mark.parametrize("n,nr", [(100, 60), (7, 2), (1000, 999), (3, 3)])
def test_force_vanishes_at_stopping_point(n, nr):
    cfg = EngineConfig(n, 2.0)
    o = cfg.outcome(nr)
    ell = max_shift(cfg, o)
    if ell < cfg.box_length / 2:
        assert abs(net_force(cfg, o, ell)) <= 1e-12 * n
    assert ell == pytest.approx(cfg.box_length * abs(nr - (n - nr)) / (2 * n))


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 5000), st.data())
def test_force_matches_two_pressure_form(n, data):
    cfg = EngineConfig(n, 1.0)
    o = cfg.outcome(data.draw(st.integers(0, n)))
    x = data.draw(st.floats(-0.45, 0.45))
    ref = direct_force(cfg, o, x)
    assert net_force(cfg, o, x) == pytest.approx(ref, rel=1e-9, abs=1e-9 * n)


@pytest.mark.parametrize("x", [-0.5, 0.5, 0.7])
def test_force_rejects_walls(x):
    cfg = EngineConfig(10, 1.0)
    with pytest.raises(ValueError):
        net_force(cfg, cfg.outcome(6), x)


def test_closed_form_examples():
    cfg = EngineConfig(100)
    assert work_closed_form(cfg, cfg.outcome(50)) == 0.0
    assert work_closed_form(cfg, cfg.outcome(100)) == pytest.approx(100 * math.log(2), rel=1e-15)
    assert work_closed_form(cfg, cfg.outcome(60)) == pytest.approx(W_A_100_60, rel=1e-14)
    assert work_from_entropy(cfg, cfg.outcome(60)) == pytest.approx(W_A_100_60, rel=1e-12)


def test_quadrature_examples():
    cfg = EngineConfig(100)
    assert work_by_quadrature(cfg, cfg.outcome(50)) == 0.0
    assert work_by_quadrature(cfg, cfg.outcome(60)) == pytest.approx(W_A_100_60, rel=1e-10)
    two = EngineConfig(2)
    # all molecules on one side: the partition slides all the way to the far wall
    assert work_by_quadrature(two, two.outcome(2)) == pytest.approx(2 * math.log(2), rel=1e-10)


def test_quadrature_with_thermal_energy_and_length():
    cfg = EngineConfig(40, 3.0, 2.5)
    o = cfg.outcome(29)
    assert work_by_quadrature(cfg, o) == pytest.approx(work_closed_form(cfg, o), rel=1e-9)


def test_closed_form_vs_quadrature_random():
    rng = np.random.default_rng(17)
    for _ in range(200):
        n = int(rng.integers(1, 10_001))
        nr = int(rng.integers(0, n + 1))
        cfg = EngineConfig(n)
        res = evaluate(cfg, cfg.outcome(nr))
        rel = abs(res.work_closed_form - res.work_quadrature) / max(res.work_closed_form, 1e-15)
        assert rel <= 1e-8


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10**6), st.data())
def test_nonnegative_and_symmetric(n, data):
    nr = data.draw(st.integers(0, n))
    cfg = EngineConfig(n)
    w = work_closed_form(cfg, cfg.outcome(nr))
    assert w >= 0
    assert w == work_closed_form(cfg, cfg.outcome(n - nr))
    assert (w == 0) == (2 * nr == n)


@pytest.mark.parametrize("n", [2, 9, 100, 1001])
def test_monotone_in_imbalance(n):
    cfg = EngineConfig(n)
    ws = [work_closed_form(cfg, cfg.outcome(nr)) for nr in range((n + 1) // 2, n + 1)]
    assert all(b > a for a, b in zip(ws, ws[1:])) or n == 1


def test_cycle_single_molecule_always_ln2():
    cfg = EngineConfig(1)
    for t in range(50):
        r = run_cycle_a(cfg, TrialStream(0, t))
        assert r.net_work == pytest.approx(math.log(2), rel=1e-15)
        assert r.measurement in ("left", "right")


def test_cycle_tie_is_zero():
    cfg = EngineConfig(8)
    r = cycle_report(cfg, cfg.outcome(4))
    assert r.measurement == "tie"
    assert r.net_work == 0.0
    assert [lbl[:2] for lbl, _ in r.step_works] == ["A1", "A2", "A3"]
