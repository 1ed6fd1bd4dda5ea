import numpy as np
import pytest

from mfrnn.coupling import (CouplingPlan, d_tau, d_tau_curve, fit_power_law, gather, rate_sweep,
                            subsample)
from mfrnn.data import MapSpec, label_with_teacher, sample_batch
from mfrnn.errors import ConfigError, PreconditionError
from mfrnn.model import NetConfig, WeightSet
from mfrnn.trainer import TrainConfig, init_weights, student_law, teacher_law

from conftest import random_net


def shifted(w, dxh=0.0, dhh=0.0, dhy=0.0):
    return w.replace(W_xh=w.W_xh + dxh, W_hh=w.W_hh + dhh, W_hy=w.W_hy + dhy)


def test_block_distance_hand_cases(rng):
    w = random_net(rng, 4, d=1, L=1)
    eps = 1e-3
    traj = [(0.0, w)]
    # uniform shift: ||.||_F / n**2 = 4 eps / 16 for W_hh, 2 eps / 4 for the vectors
    assert d_tau([(0.0, shifted(w, dhh=eps))], traj, 0.0) == pytest.approx(eps / 4, rel=1e-9)
    assert d_tau([(0.0, shifted(w, dhy=eps))], traj, 0.0) == pytest.approx(eps / 2, rel=1e-9)
    assert d_tau([(0.0, shifted(w, dxh=eps))], traj, 0.0) == pytest.approx(eps / 2, rel=1e-9)
    assert d_tau(traj, traj, 0.0) == 0.0


def test_running_supremum(rng):
    w = random_net(rng, 3, L=1)
    child = [(0.0, w), (1.0, shifted(w, dhy=0.3)), (2.0, shifted(w, dhy=0.1))]
    ref = [(t, w) for t, _ in child]
    curve = d_tau_curve(child, ref)
    vals = [v for _, v in curve]
    assert vals == sorted(vals)
    assert vals[1] == vals[2]
    assert d_tau(child, ref, 0.5) == 0.0
    with pytest.raises(PreconditionError):
        d_tau_curve(child, ref[:2])


def test_subsample_properties(rng):
    ref = random_net(rng, 30, d=2, L=2)
    child, idx = subsample(ref, 10, seed=1)
    assert len(set(idx.tolist())) == 10 and list(idx) == sorted(idx)
    assert np.array_equal(child.W_hh, ref.W_hh[np.ix_(idx, idx)])
    assert np.array_equal(child.W_xh, ref.W_xh[idx])
    full, idx_full = subsample(ref, 30, seed=9)
    assert np.array_equal(idx_full, np.arange(30)) and full.equals(ref)
    one, idx1 = subsample(ref, 1, seed=2)
    assert one.W_hh.shape == (1, 1) and one.W_hh[0, 0] == ref.W_hh[idx1[0], idx1[0]]
    with pytest.raises(ConfigError):
        subsample(ref, 31, seed=0)
    _, idx_rep = subsample(ref, 60, seed=0, replace=True)
    assert len(idx_rep) == 60


def test_plan_is_deterministic(rng):
    ref = random_net(rng, 40)
    a = CouplingPlan.build(ref, [5, 10, 20], seed=3)
    b = CouplingPlan.build(ref, [5, 10, 20], seed=3)
    assert all(np.array_equal(a.index_sets[n], b.index_sets[n]) for n in (5, 10, 20))
    with pytest.raises(ConfigError):
        CouplingPlan.build(ref, [10, 5], seed=3)


def test_fit_power_law():
    ns = np.array([10, 20, 40, 80])
    slope, intercept, r2 = fit_power_law(ns, 3.0 * ns ** -0.5)
    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert np.exp(intercept) == pytest.approx(3.0, rel=1e-12)
    assert r2 == pytest.approx(1.0)
    s2, _, _ = fit_power_law(np.append(ns, 160), np.append(3.0 * ns ** -0.5, 0.0))
    assert s2 == pytest.approx(-0.5, abs=1e-12)
    assert np.isnan(fit_power_law([10], [1.0])[0])


def test_small_rate_sweep():
    net = NetConfig(n=40, L=2, R=5.0)
    teacher = init_weights(net.with_width(5), teacher_law(5), seed=1)
    data = label_with_teacher(sample_batch(MapSpec(), 64, 2, seed=2), teacher)
    ref = init_weights(net, student_law(40), seed=3)
    plan = CouplingPlan.build(ref, [5, 10, 40], seed=4)
    cfg = TrainConfig(beta=0.05, steps=20, scaling="meanfield", snapshot_every=5, R=5.0)
    run = rate_sweep(plan, data, cfg)
    table = {n: d for n, _, d in run.dtau_table}
    for n, curve in run.dtau_curves.items():
        vals = [v for _, v in curve]
        assert vals[0] == 0.0  # exact gather before any step
        assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert table[40] == 0.0
    assert table[5] > 0 and table[10] > 0
    assert np.isfinite(run.slope)
    with pytest.raises(PreconditionError):
        rate_sweep(plan, data, TrainConfig(beta=0.05, steps=2, scaling="plain", R=5.0))
