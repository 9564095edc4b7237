import json
import math

import pytest

from recoil_lab import (
    PUBLISHED_EPSILON_YB171,
    DegenerateEpsilonError,
    DomainError,
    IonSpec,
    TrapSpec,
    excited_trap_frequency,
    excited_trap_frequency_first_order,
    feasibility_report,
    format_duration,
    frequency_splitting,
    get_ion,
    ion_epsilon,
    load_ion_catalog,
    period_count,
    phase_separation,
    separation_time,
    separation_time_first_order,
)

YB = get_ion("yb171")
TRAP = TrapSpec.from_mhz(1.3)


def test_catalog_entry():
    assert YB.mass == pytest.approx(170.936 * 1.66053906660e-27, rel=1e-15)
    assert YB.transition_frequency == 642e12
    assert math.isinf(YB.excited_lifetime)


def test_unknown_ion_lists_catalog():
    with pytest.raises(DomainError, match="yb171"):
        get_ion("ca40")


def test_custom_catalog(tmp_path):
    path = tmp_path / "ions.csv"
    path.write_text("name,mass_u,transition_thz,lifetime_s_or_inf\nca40,39.96,411,1.2\n")
    ca = load_ion_catalog(path)["ca40"]
    assert ca.excited_lifetime == 1.2


def test_constants_epsilon():
    assert ion_epsilon(YB) == pytest.approx(1.667504508889991e-11, rel=1e-14)


def test_excited_frequency_forms_agree():
    exact = excited_trap_frequency(TRAP, YB)
    first = excited_trap_frequency_first_order(TRAP, YB)
    eps = ion_epsilon(YB)
    assert abs(exact - first) / exact <= eps**2
    assert excited_trap_frequency(TRAP, YB, epsilon=0.0) == TRAP.omega(YB.mass)


def test_doubled_mass_at_fixed_stiffness():
    trap = TrapSpec(stiffness=1e-12)
    heavy = IonSpec(2 * YB.mass, YB.transition_frequency)
    ratio = excited_trap_frequency(trap, heavy) / excited_trap_frequency(trap, YB)
    assert ratio == pytest.approx(1 / math.sqrt(2), rel=1e-10)


def test_splitting_has_no_cancellation():
    eps = 1.36e-11
    want = TRAP.omega(YB.mass) * (eps / 2 - 3 * eps**2 / 8)
    assert frequency_splitting(TRAP, YB, eps) == pytest.approx(want, rel=1e-14)


def test_published_chain():
    T = separation_time_first_order(TRAP, YB, PUBLISHED_EPSILON_YB171)
    assert period_count(YB, PUBLISHED_EPSILON_YB171) == pytest.approx(7.4e10, rel=0.01)
    assert T == pytest.approx(5.7e4, rel=0.01)
    assert T / 3600 == pytest.approx(15.0, rel=0.05)


def test_separation_time_scales_with_trap():
    t1 = separation_time(TRAP, YB, PUBLISHED_EPSILON_YB171)
    t2 = separation_time(TrapSpec.from_mhz(2.6), YB, PUBLISHED_EPSILON_YB171)
    assert t2 == pytest.approx(t1 / 2, rel=1e-14)


def test_phase_separation():
    T = separation_time(TRAP, YB)
    assert phase_separation(TRAP, YB, 0.0) == 0.0
    assert phase_separation(TRAP, YB, T) == pytest.approx(math.pi, rel=1e-12)
    assert phase_separation(TRAP, YB, T / 2) == pytest.approx(math.pi / 2, rel=1e-12)
    with pytest.raises(DomainError):
        phase_separation(TRAP, YB, -1.0)


def test_degenerate_epsilon():
    with pytest.raises(DegenerateEpsilonError):
        separation_time(TRAP, YB, 1e-16)
    with pytest.raises(DegenerateEpsilonError):
        feasibility_report(TRAP, YB, 0.0)


@pytest.mark.parametrize("eps", [None, 1.36e-11, 1e-6, 3e-3])
@pytest.mark.parametrize("mhz", [0.1, 1.3, 17.0])
def test_report_invariants(eps, mhz):
    trap = TrapSpec.from_mhz(mhz)
    r = feasibility_report(trap, YB, eps)
    assert r.period_count * 2 * math.pi / r.omega_ground == pytest.approx(r.separation_time, rel=1e-12)
    assert r.period_count == pytest.approx(1 / r.epsilon, rel=1e-15)
    assert r.period_count_exact == pytest.approx(r.period_count, rel=2 * r.epsilon)
    rebuilt = TrapSpec(stiffness=YB.mass * r.omega_ground**2)
    assert rebuilt.kappa(YB.mass) == pytest.approx(trap.kappa(YB.mass), rel=1e-12)
    assert r.omega_excited < r.omega_ground


def test_report_json_and_feasibility():
    r = feasibility_report(TRAP, YB, PUBLISHED_EPSILON_YB171)
    assert r.feasible and r.epsilon_source == "override"
    d = json.loads(json.dumps(r.to_dict(), allow_nan=False))
    assert d["excited_lifetime"] is None
    assert d["separation_time_text"] == "15.7 hours"
    short = IonSpec(YB.mass, YB.transition_frequency, excited_lifetime=10.0)
    assert not feasibility_report(TRAP, short).feasible


def test_format_duration():
    assert format_duration(90.0) == "1.5 minutes"
    assert format_duration(2.0) == "2 s"
    assert format_duration(math.inf) == "infinite"


def test_spec_validation():
    with pytest.raises(DomainError):
        TrapSpec()
    with pytest.raises(DomainError):
        TrapSpec(stiffness=1.0, ground_frequency=1.0)
    with pytest.raises(DomainError):
        IonSpec(-1.0, 1e14)
