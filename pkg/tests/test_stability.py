import numpy as np
import pytest

from jointpid.controller import ControllerConfig, GainTriple
from jointpid.plants import FirstOrderParams
from jointpid.robustness import ModelInstance, TaskSpec, run_closed_loop
from jointpid.sensing import SensorModel
from jointpid.stability import (
    PlantUncertainty,
    delay_augmented_matrix,
    euler_pi_matrix,
    jury_euler_pi,
    jury_monic_quadratic,
    jury_zoh_pi,
    ki_upper_bound,
    p_control_pole,
    region_grid,
    robust_point_screen,
    spectral_radius,
    zoh_pi_matrix,
)

NOMINAL = FirstOrderParams(tau=1.0, gain=1.0, dt=0.01)


class TestPControlPole:
    def test_direct_substitution(self):
        assert p_control_pole(3.0, NOMINAL) == pytest.approx(0.96)

    def test_open_loop(self):
        assert p_control_pole(0.0, NOMINAL) == pytest.approx(1.0 - 0.01)

    def test_marginal_sampling_period(self):
        kp = 3.0
        dt_star = 2.0 * NOMINAL.tau / (1.0 + NOMINAL.gain * kp)
        p = FirstOrderParams(tau=1.0, gain=1.0, dt=dt_star)
        assert p_control_pole(kp, p) == pytest.approx(-1.0)


class TestJuryEuler:
    def test_nominal_pi_pair_is_stable(self):
        v = jury_euler_pi(3.0, 1.0, NOMINAL)
        assert v.stable
        m1, m2, m3 = v.margins
        assert m1 == pytest.approx(1.0)
        assert m2 == pytest.approx(4.0 - 0.08 + 0.0001)
        assert m3 == pytest.approx(0.04 - 0.0001)
        assert v.spectral_radius < 1.0

    def test_zero_integral_gain_fails_strict_test(self):
        assert not jury_euler_pi(3.0, 0.0, NOMINAL).stable

    def test_integral_gain_beyond_guardrail_unstable(self):
        assert not jury_euler_pi(3.0, 500.0, NOMINAL).stable
        assert jury_euler_pi(3.0, 399.0, NOMINAL).stable


class TestGuardrail:
    def test_reference_values(self):
        assert ki_upper_bound(3.0, NOMINAL) == pytest.approx(400.0)
        assert ki_upper_bound(0.0, NOMINAL) == pytest.approx(100.0)

    def test_doubling_dt_halves_bound(self):
        p2 = FirstOrderParams(tau=1.0, gain=1.0, dt=0.02)
        assert ki_upper_bound(3.0, p2) == pytest.approx(200.0)


class TestMonicQuadratic:
    def test_double_pole_at_origin(self):
        assert jury_monic_quadratic(0.0, 0.0).stable

    def test_double_pole_on_circle_rejected(self):
        v = jury_monic_quadratic(-2.0, 1.0)
        assert not v.stable
        assert v.margins[0] == pytest.approx(0.0)

    def test_matches_root_modulus_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(10_000):
            a1 = rng.uniform(-3, 3)
            a0 = rng.uniform(-2, 2)
            roots = np.roots([1.0, a1, a0])
            radius = float(np.max(np.abs(roots)))
            if abs(radius - 1.0) < 1e-9:
                continue
            v = jury_monic_quadratic(a1, a0)
            assert v.stable == (radius < 1.0)
            assert v.spectral_radius == pytest.approx(radius, rel=1e-9)


class TestJuryZoh:
    def test_nominal_pair_stable_and_matches_eigenvalues(self):
        v = jury_zoh_pi(3.0, 1.0, NOMINAL)
        radius = spectral_radius(zoh_pi_matrix(3.0, 1.0, NOMINAL))
        assert v.stable
        assert radius < 1.0
        assert v.spectral_radius == pytest.approx(radius, rel=1e-9)

    def test_boundary_bisection_consistency(self):
        kp = 3.0
        lo, hi = 1.0, 2000.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if spectral_radius(zoh_pi_matrix(kp, mid, NOMINAL)) < 1.0:
                lo = mid
            else:
                hi = mid
        assert jury_zoh_pi(kp, lo * 0.999, NOMINAL).stable
        assert not jury_zoh_pi(kp, hi * 1.001, NOMINAL).stable

    def test_small_dt_agrees_with_euler(self):
        p = FirstOrderParams(tau=1.0, gain=1.0, dt=1e-4)
        for kp in np.linspace(0.2, 10, 7):
            for ki in np.linspace(0.5, 80, 7):
                assert (jury_euler_pi(kp, ki, p).stable
                        == jury_zoh_pi(kp, ki, p).stable)


def test_jury_matches_eigenvalue_oracle_on_random_draws():
    rng = np.random.default_rng(7)
    n_checked = 0
    for _ in range(10_000):
        tau = rng.uniform(0.2, 2.0)
        gain = rng.uniform(0.5, 2.0)
        dt = rng.uniform(0.001, min(0.1, 0.9 * tau))
        p = FirstOrderParams(tau=tau, gain=gain, dt=dt)
        kp = rng.uniform(0.0, 10.0)
        ki = rng.uniform(0.0, 1.5 * ki_upper_bound(kp, p))
        for verdict, mat in (
            (jury_euler_pi(kp, ki, p), euler_pi_matrix(kp, ki, p)),
            (jury_zoh_pi(kp, ki, p), zoh_pi_matrix(kp, ki, p)),
        ):
            radius = spectral_radius(mat)
            if abs(radius - 1.0) < 1e-9:
                continue
            assert verdict.stable == (radius < 1.0)
            n_checked += 1
    assert n_checked > 15_000


class TestRegionGrid:
    def test_all_stable_corners(self):
        grid = region_grid((1.0, 2.0), (0.5, 1.5), 2, "euler", NOMINAL)
        assert grid.verdicts.all()
        assert sum(1 for _ in grid.rows()) == 4

    def test_transition_brackets_guardrail(self):
        grid = region_grid((3.0, 3.001), (390.0, 410.0), 21, "euler", NOMINAL)
        col = grid.verdicts[:, 0]
        ki_axis = grid.ki_axis
        last_stable = ki_axis[np.nonzero(col)[0][-1]]
        first_unstable = ki_axis[np.nonzero(~col)[0][0]]
        assert last_stable < 400.0 < first_unstable + 1.0
        assert first_unstable >= 400.0

    def test_euler_and_zoh_disagree_at_large_ki(self):
        euler = region_grid((0.1, 10.0), (1.0, 900.0), 60, "euler", NOMINAL)
        zoh = region_grid((0.1, 10.0), (1.0, 900.0), 60, "zoh", NOMINAL)
        assert np.any(euler.verdicts != zoh.verdicts)

    def test_euler_stable_ki_set_is_an_interval(self):
        # scanning up the ki axis at fixed kp crosses from stable to
        # unstable exactly once
        grid = region_grid((3.0, 3.0001), (0.1, 800.0), 400, "euler", NOMINAL)
        col = grid.verdicts[:, 0].astype(int)
        assert np.sum(np.abs(np.diff(col))) == 1

    def test_degenerate_ranges_rejected(self):
        with pytest.raises(ValueError):
            region_grid((1.0, 1.0), (0.0, 1.0), 10, "euler", NOMINAL)
        with pytest.raises(ValueError):
            region_grid((0.0, 1.0), (0.0, 1.0), 10, "simpson", NOMINAL)


class TestRobustPointScreen:
    def test_degenerate_uncertainty_matches_jury(self):
        tight = PlantUncertainty(tau_range=(1.0, 1.0), gain_range=(1.0, 1.0),
                                 delays=(0,))
        frac = robust_point_screen(3.0, 1.0, tight, n_draws=16, seed=0)
        assert frac == 1.0
        frac = robust_point_screen(3.0, 500.0, tight, n_draws=16, seed=0)
        assert frac == 0.0

    def test_deep_interior_gains_robust_to_full_family(self):
        frac = robust_point_screen(1.0, 1.0, PlantUncertainty(),
                                   n_draws=400, seed=3)
        assert frac == 1.0

    def test_delay_augmentation_reduces_to_plain_matrix(self):
        m0 = delay_augmented_matrix(3.0, 1.0, NOMINAL, 0)
        assert np.allclose(m0, zoh_pi_matrix(3.0, 1.0, NOMINAL))
        m2 = delay_augmented_matrix(3.0, 1.0, NOMINAL, 2)
        assert m2.shape == (4, 4)


def _unclamped_zero_ref_run(kp, ki, p: FirstOrderParams, horizon=50.0):
    model = ModelInstance(family="first_order_euler", first=p,
                          sensor=SensorModel(), u_max=10.0)
    cfg = ControllerConfig(gains=GainTriple(kp=kp, ki=ki),
                           u_min=-np.inf, u_max=np.inf)
    task = TaskSpec(kind="step", horizon=horizon, amplitude=0.0)
    return run_closed_loop(model, cfg, task, divergence_limit=np.inf,
                           initial_output=1.0)


def test_jury_simulation_consistency():
    """Verdicts agree with the long-horizon behavior of the real loop.

    A 50 s run resolves growth/decay only when the spectral radius is far
    enough from 1: |r - 1| > 2e-3 gives a factor exceeding 2e4 over 5000
    samples, comfortably past the decay and blow-up thresholds.
    """
    rng = np.random.default_rng(11)
    n_decay = n_grow = 0
    while n_decay < 8 or n_grow < 8:
        kp = rng.uniform(0.0, 8.0)
        ki = rng.uniform(0.1, 1.6 * ki_upper_bound(kp, NOMINAL))
        verdict = jury_euler_pi(kp, ki, NOMINAL)
        radius = verdict.spectral_radius
        if verdict.stable and radius < 0.998 and n_decay < 8:
            traj = _unclamped_zero_ref_run(kp, ki, NOMINAL)
            assert abs(traj.output[-1]) < 1e-3
            n_decay += 1
        elif not verdict.stable and radius > 1.002 and n_grow < 8:
            traj = _unclamped_zero_ref_run(kp, ki, NOMINAL)
            assert np.max(np.abs(traj.output)) > 1e3
            n_grow += 1


def test_euler_p_control_boundary_flips():
    kp = 3.0
    dt_star = 2.0 * NOMINAL.tau / (1.0 + NOMINAL.gain * kp)
    below = FirstOrderParams(tau=1.0, gain=1.0, dt=0.9 * dt_star)
    above = FirstOrderParams(tau=1.0, gain=1.0, dt=1.1 * dt_star)
    traj = _unclamped_zero_ref_run(kp, 0.0, below)
    assert np.max(np.abs(traj.output[len(traj) // 2:])) < 1.0
    traj = _unclamped_zero_ref_run(kp, 0.0, above)
    assert np.max(np.abs(traj.output)) > 1e3


def test_grid_export_roundtrip(tmp_path):
    grid = region_grid((0.0, 5.0), (0.0, 500.0), 8, "zoh", NOMINAL)
    grid.write_csv(tmp_path / "g.csv")
    grid.write_json(tmp_path / "g.json")
    text = (tmp_path / "g.csv").read_text()
    assert text.splitlines()[0] == "kp,ki,stable"
    assert len(text.splitlines()) == 1 + 64
    import json
    payload = json.loads((tmp_path / "g.json").read_text())
    assert payload["discretization"] == "zoh"
    assert len(payload["stable"]) == 8
