import io
import math

import numpy as np
import pytest

from recoil_lab import (
    AtomState,
    Branch,
    BranchMismatchError,
    DecayScenario,
    DomainError,
    Velocity,
    fractional_speed_loss,
    get_ion,
    integrate_scenario,
    mass_excess_analytic,
    mass_loss,
    mass_trajectory_analytic,
    newton_residual,
    velocity_excess_analytic,
    velocity_trajectory_analytic,
)

from conftest import GAMMA, OMEGA0

YB = get_ion("yb171")
MASS_DEFECT = 4.733143278987671e-36


def scenario(branch, v=(0.0, 0.0, 300.0), gamma=GAMMA):
    return DecayScenario(branch, OMEGA0, gamma, AtomState(YB.mass, Velocity.from_array(v)))


def test_mass_loss_and_epsilon():
    assert mass_loss(OMEGA0) == pytest.approx(MASS_DEFECT, rel=1e-15)
    assert fractional_speed_loss(OMEGA0, YB.mass) == pytest.approx(1.667504508889991e-11, rel=1e-14)
    with pytest.raises(DomainError):
        fractional_speed_loss(OMEGA0, 0.0)


def test_mass_excess_at_infinity_is_exact():
    s = scenario("constant_velocity")
    assert mass_excess_analytic(s, math.inf) == -s.mass_defect
    assert mass_excess_analytic(s, 0.0) == 0.0
    assert mass_trajectory_analytic(s, math.inf) == pytest.approx(YB.mass, rel=1e-10)


def test_velocity_at_infinity():
    s = scenario(Branch.CONSTANT_MASS)
    dv = velocity_excess_analytic(s, math.inf)
    assert dv[2] / 300.0 == pytest.approx(math.expm1(-s.epsilon), rel=1e-14)
    assert velocity_trajectory_analytic(s, math.inf).speed() == pytest.approx(300.0 * math.exp(-s.epsilon), rel=1e-15)


def test_branches_are_exclusive():
    with pytest.raises(BranchMismatchError):
        velocity_excess_analytic(scenario("constant_velocity"), 1.0)
    with pytest.raises(BranchMismatchError):
        mass_excess_analytic(scenario("constant_mass"), 1.0)


@pytest.mark.parametrize("branch", ["constant_mass", "constant_velocity"])
def test_rk4_matches_analytic(branch):
    s = scenario(branch)
    traj = integrate_scenario(s, 1e-3 / GAMMA, 10_000)
    t_end = traj.times[-1]
    if branch == "constant_mass":
        got, want = traj.velocity_excess[-1], velocity_excess_analytic(s, t_end)
        assert np.all(traj.mass_excess == 0.0)
    else:
        got, want = traj.mass_excess[-1], mass_excess_analytic(s, t_end)
        assert np.all(traj.velocities == traj.velocities[0])
    assert np.linalg.norm(got - want) <= 1e-9 * np.linalg.norm(want)


def test_rk4_is_fourth_order():
    s = scenario("constant_mass")
    t_end = 2.0 / GAMMA
    errs = []
    for gdt in (0.1, 0.05, 0.025):
        n = round(2.0 / gdt)
        traj = integrate_scenario(s, t_end / n, n)
        errs.append(abs(traj.velocity_excess[-1, 2] - velocity_excess_analytic(s, t_end)[2]))
    slope = np.polyfit(np.log([0.1, 0.05, 0.025]), np.log(errs), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.3)


def test_coarse_step_warns():
    with pytest.warns(UserWarning, match="coarse"):
        integrate_scenario(scenario("constant_mass"), 0.5 / GAMMA, 4)


@pytest.mark.parametrize("branch", ["constant_mass", "constant_velocity"])
@pytest.mark.parametrize("gt", [0.0, 1e-7, 0.5, 3.0])
def test_newton_residual_small(branch, gt):
    s = scenario(branch)
    f0 = np.linalg.norm(s.force(0.0))
    assert np.linalg.norm(newton_residual(s, gt / GAMMA)) <= 1e-8 * f0


def test_momentum_bookkeeping():
    # momentum lost by the atom equals the impulse of the force on both branches
    for branch in ("constant_mass", "constant_velocity"):
        s = scenario(branch)
        if branch == "constant_mass":
            dp = YB.mass * velocity_excess_analytic(s, math.inf)
        else:
            dp = mass_excess_analytic(s, math.inf) * s.initial.velocity.as_array()
        np.testing.assert_allclose(dp, -s.mass_defect * s.initial.velocity.as_array(), rtol=1e-10)


def test_zero_velocity_is_flat():
    traj = integrate_scenario(scenario("constant_mass", v=(0.0, 0.0, 0.0)), 1e-3 / GAMMA, 100)
    assert np.all(traj.velocities == 0.0)


def test_trajectory_csv_and_states():
    traj = integrate_scenario(scenario("constant_velocity"), 1e-2 / GAMMA, 5)
    buf = io.StringIO()
    traj.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t_s,mass_excess_kg,vx,vy,vz,excited_prob"
    assert len(lines) == 7
    assert float(lines[-1].split(",")[1]) == traj.mass_excess[-1]
    states = list(traj.states())
    assert states[0].excited_prob == 1.0
    assert states[-1].mass_excess == traj.mass_excess[-1]


def test_scenario_validation():
    with pytest.raises(DomainError):
        scenario("frozen")
    with pytest.raises(DomainError):
        DecayScenario("constant_mass", OMEGA0, GAMMA, AtomState(YB.mass, Velocity.from_beta(0.0), excited_prob=0.5))
    with pytest.raises(DomainError):
        integrate_scenario(scenario("constant_mass"), -1.0, 10)
