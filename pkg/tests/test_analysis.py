import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, strategies as st

from opo_cqfc import analysis
from opo_cqfc.analysis import (
    HessianError,
    SweepRow,
    SweepTable,
    detect_regime_switch,
    monte_carlo_phase,
    pearson,
    phase_correlations,
    phase_hessian,
    point_seed,
    refine_regime_switch,
    single_opo_scan_optimum,
    sweep,
)
from opo_cqfc.netmodel import mhz_to_rad
from opo_cqfc.objective import Problem, evaluate
from opo_cqfc.optim import AlgorithmSpec, HybridConfig, hybrid_optimize

TINY = HybridConfig(
    islands=(AlgorithmSpec("differential_evolution", {"generations": 3}),
             AlgorithmSpec("bee_colony", {"generations": 1})),
    n_pop=8, n_ev=2, master_seed=1,
)


def fake_table(omegas, tc2, T_u=0.9):
    rows = [SweepRow(point={"omega_opt": w}, params={"Tc2": t}, z=np.zeros(12), best_J=0.1,
                     Q_minus_db=-9.0, Q_plus_db=9.0, stability_margin=-1.0, seed=0)
            for w, t in zip(omegas, tc2)]
    return SweepTable({"omega_opt": list(omegas)}, rows, Problem().with_(T_u=T_u))


def test_pearson_examples():
    xs = np.array([1.0, 2.0, 4.0, 7.0])
    assert pearson(xs, xs) == pytest.approx(1.0)
    assert pearson(xs, -xs) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        pearson([1.0], [2.0])
    with pytest.raises(ValueError):
        pearson([1.0, 2.0], [1.0, 2.0, 3.0])


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=30), st.floats(0.1, 10), st.floats(-5, 5))
def test_pearson_affine_invariance(xs, a, b):
    x = np.array(xs)
    if np.ptp(x) < 1e-6:
        return
    y = np.sin(x)
    if np.ptp(y) < 1e-6:
        return
    r = pearson(x, y)
    assert -1 <= r <= 1
    assert pearson(a * x + b, y) == pytest.approx(r, abs=1e-9)


def test_detect_switch_synthetic():
    w = mhz_to_rad(np.arange(2, 21, 2.0))
    tc2 = [0.9, 0.9, 0.9, 0.01, 0.02, 0.01, 0.02, 0.02, 0.03, 0.02]
    assert detect_regime_switch(fake_table(w, tc2)) == pytest.approx(w[3])


def test_detect_switch_moderate_drop():
    # lossy lines: the high-frequency regime keeps T_c2 near 0.7 T_u
    w = mhz_to_rad(np.arange(84, 101, 4.0))
    assert detect_regime_switch(fake_table(w, [0.9, 0.9, 0.638, 0.689, 0.74])) == pytest.approx(w[2])
    assert detect_regime_switch(fake_table(w, [0.9, 0.9, 0.638, 0.689, 0.74]), level=0.5) is None


def test_detect_switch_ignores_plateau_jitter():
    w = mhz_to_rad(np.arange(2, 11, 2.0))
    assert detect_regime_switch(fake_table(w, [0.9, 0.88, 0.9, 0.87, 0.9])) is None
    with pytest.raises(ValueError):
        detect_regime_switch(fake_table(w, [0.9] * 5), level=0.96)


def test_detect_switch_none_when_flat():
    w = mhz_to_rad(np.arange(2, 21, 2.0))
    assert detect_regime_switch(fake_table(w, [0.9] * len(w))) is None


def test_detect_switch_requires_plateau():
    w = mhz_to_rad(np.arange(2, 11, 2.0))
    assert detect_regime_switch(fake_table(w, [0.1, 0.1, 0.9, 0.9, 0.1])) == pytest.approx(w[4])


def test_detect_switch_rejects_multi_axis():
    t = fake_table([1.0, 2.0], [0.9, 0.1])
    t.axes["x_u"] = [0.1, 0.2]
    with pytest.raises(ValueError):
        detect_regime_switch(t)


def test_refine_samples_bracket(monkeypatch):
    star = mhz_to_rad(26.0)
    calls = []

    def fake_sweep(template, grid, cfg, **kw):
        w = list(grid["omega_opt"])
        calls.append(w)
        return fake_table(w, [0.9 if v < star - 1 else 0.05 for v in w])

    monkeypatch.setattr(analysis, "sweep", fake_sweep)
    coarse = list(mhz_to_rad(np.arange(2, 53, 10.0)))
    found, table = refine_regime_switch(Problem(), coarse, mhz_to_rad(2.0))
    assert found == pytest.approx(star)
    np.testing.assert_allclose(calls[1], mhz_to_rad([24.0, 26.0, 28.0, 30.0]))
    assert len(table) == len(coarse) + 4
    assert list(table.column("omega_opt")) == sorted(table.column("omega_opt"))


def test_sweep_arity_order_and_seeds():
    prob = Problem(topology="single")
    grid = {"x_u": [0.1, 0.2], "omega_opt": list(mhz_to_rad([2.0, 4.0, 6.0]))}
    t = sweep(prob, grid, TINY)
    assert len(t) == 6
    assert [r.point["x_u"] for r in t.rows] == [0.1, 0.1, 0.1, 0.2, 0.2, 0.2]
    assert len({r.seed for r in t.rows}) == 6
    one = t.rows[4]
    direct = hybrid_optimize(prob.with_(**one.point), replace(TINY, master_seed=one.seed))
    np.testing.assert_array_equal(direct.best_z, one.z)
    assert one.seed == point_seed(TINY.master_seed, one.point)
    np.testing.assert_array_equal(t.column("x_u"), [0.1, 0.1, 0.1, 0.2, 0.2, 0.2])


def test_sweep_records_failures():
    t = sweep(Problem(topology="single"), {"L_out": [0.05, 2.0]}, TINY)
    assert t.rows[0].ok and not t.rows[1].ok
    assert t.rows[1].best_J == 1e6 and t.rows[1].error
    with pytest.raises(ValueError):
        sweep(Problem(), {}, TINY)


def test_hessian_of_quadratic():
    c = np.array([3.0, 1.0, 0.5, 2.0])
    prob = Problem(topology="two_opo")
    idx = prob.phase_indices
    z0 = (prob.lower + prob.upper) / 2
    f = lambda Z: 0.5 * np.sum(c * (np.atleast_2d(Z)[:, idx] - z0[idx]) ** 2, axis=1)
    rep = phase_hessian(z0, prob, objective=f, wrap=False)
    np.testing.assert_allclose(rep.H, np.diag(c), atol=1e-6)
    np.testing.assert_allclose(rep.eigenvalues, [3.0, 2.0, 1.0, 0.5], atol=1e-6)
    for k in range(4):
        v = rep.eigenvectors[:, k]
        np.testing.assert_allclose(rep.H @ v, rep.eigenvalues[k] * v, atol=1e-8)
    assert rep.variables == ("theta_p", "theta_c", "phi1", "phi2")


def test_hessian_retry_then_error():
    prob = Problem(topology="single")
    z0 = np.array([0.1, 0.5, 0.0, 0.2, 1.0])
    calls = []

    def flaky(Z):
        calls.append(len(Z))
        out = np.ones(len(Z))
        if len(calls) == 1:
            out[1] = np.nan
        return out

    rep = phase_hessian(z0, prob, objective=flaky)
    assert rep.step == pytest.approx(1e-4)
    with pytest.raises(HessianError):
        phase_hessian(z0, prob, objective=lambda Z: np.full(len(Z), np.nan))


def test_single_opo_hessian_vanishes():
    rng = np.random.default_rng(0)
    prob = Problem(topology="single", omega_opt=mhz_to_rad(20))
    for _ in range(10):
        z = prob.lower + rng.random(5) * (prob.upper - prob.lower)
        H = phase_hessian(z, prob).H
        assert abs(H[0, 0]) < 1e-8 * max(1.0, evaluate(z, prob))


def test_two_opo_phase_symmetries_give_null_space():
    # any point (not only optima) has the two exact phase symmetries
    rng = np.random.default_rng(1)
    prob = Problem(topology="two_opo", omega_opt=mhz_to_rad(40))
    done = 0
    while done < 5:
        z = prob.lower + rng.random(12) * (prob.upper - prob.lower)
        if evaluate(z, prob) >= prob.penalty:
            continue
        rep = phase_hessian(z, prob)
        for v in (np.array([2.0, 0, -1, 1]), np.array([0, 2.0, 1, -1])):
            assert np.linalg.norm(rep.H @ v) <= 1e-6 * max(np.abs(rep.H).max(), 1)
        done += 1


def test_monte_carlo_sigma_zero_and_reproducible():
    prob = Problem(topology="two_opo", omega_opt=mhz_to_rad(50)).with_(x_u=0.2)
    z = hybrid_optimize(prob, TINY).best_z
    r0 = monte_carlo_phase(z, prob, 0.0, 100, seed=3)
    from opo_cqfc.objective import spectra_at
    assert r0.mean_Q_minus_db == 10 * np.log10(spectra_at(z, prob, prob.omega_opt)[0])
    a = monte_carlo_phase(z, prob, 0.05, 3000, seed=4)
    b = monte_carlo_phase(z, prob, 0.05, 3000, seed=4)
    assert a == b
    assert a.n_samples == 3000
    with pytest.raises(ValueError):
        monte_carlo_phase(z, prob, -0.1, 10)
    with pytest.raises(ValueError):
        monte_carlo_phase(z, prob, 0.1, 0)


def test_phase_correlations_keys():
    rows = []
    rng = np.random.default_rng(2)
    for w in range(5):
        p1 = rng.uniform(0, 2 * np.pi)
        rows.append(SweepRow(point={"omega_opt": float(w)},
                             params={"theta_p": rng.uniform(0, 6), "theta_c": rng.uniform(0, 6),
                                     "phi1": p1, "phi2": np.pi - p1},
                             z=np.zeros(12), best_J=0, Q_minus_db=0, Q_plus_db=0,
                             stability_margin=-1, seed=0))
    out = phase_correlations(SweepTable({"omega_opt": list(range(5))}, rows, Problem()))
    assert len(out) == 18
    assert out[("sin", "phi1", "phi2")] == pytest.approx(1.0)
    assert out[("cos", "phi1", "phi2")] == pytest.approx(-1.0)


def test_scan_oracle_structure():
    prob = Problem(topology="single", omega_opt=0.0)
    T1, J, q = single_opo_scan_optimum(prob)
    assert T1 == 0.0
    assert q < 0
    with pytest.raises(ValueError):
        single_opo_scan_optimum(Problem())
