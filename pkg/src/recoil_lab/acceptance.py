"""Exit criteria for the package, runnable from pytest or ``recoil-lab selftest``.

Each check returns a :class:`CheckResult`; a check fails if any of its
assertions fails or it runs past its time budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .constants import CODATA2018, C_SI
from .dynamics import (
    AtomState,
    DecayScenario,
    integrate_scenario,
    mass_excess_analytic,
    newton_residual,
    velocity_excess_analytic,
)
from .force import (
    McSpec,
    friction_force,
    friction_force_montecarlo,
    friction_force_quadrature_primed,
    friction_force_quadrature_unprimed,
    impulse,
    naive_doppler_force,
    naive_doppler_force_quadrature,
    rest_frame_force,
)
from .iontrap import PUBLISHED_EPSILON_YB171, TrapSpec, feasibility_report, get_ion
from .kinematics import Velocity
from .patterns import DipoleDensity, EmissionPattern, TabulatedDensity

# Yb+ 2F7/2 numbers used as the default emitter
OMEGA0 = 2.0 * math.pi * 642e12
GAMMA = 3.2e7
BETAS = (1e-5, 1e-4, 1e-3, 1e-2)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool = True
    seconds: float = 0.0
    limit: float = math.inf
    details: list[str] = field(default_factory=list)

    def expect(self, ok: bool, what: str) -> None:
        ok = bool(ok)
        self.details.append(f"{'ok  ' if ok else 'FAIL'} {what}")
        self.passed &= ok

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} ({self.seconds:.2f} s, limit {self.limit:g} s)"


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def _isotropic() -> EmissionPattern:
    return EmissionPattern.isotropic(OMEGA0, GAMMA)


def smooth_symmetric_table(n_cos: int = 32, n_phi: int = 64) -> TabulatedDensity:
    """A smooth parity-symmetric density, (1 + cos^2 theta + 0.3 sin^2 theta cos 2 phi) up to normalization."""

    def g(d):
        phi = np.arctan2(d[:, 1], d[:, 0])
        return 1.0 + d[:, 2] ** 2 + 0.3 * (1.0 - d[:, 2] ** 2) * np.cos(2.0 * phi)

    return TabulatedDensity.from_function(g, n_cos, n_phi)


def check_naive_ratio() -> CheckResult:
    r = CheckResult(1, "naive/correct force ratio is 1/3", limit=1.0)
    p = _isotropic()
    for beta in BETAS:
        v = Velocity.from_beta(beta)
        closed = naive_doppler_force(p, v).force[2] / friction_force(p, v).force[2]
        r.expect(abs(closed - 1.0 / 3.0) <= 2.0**-53, f"beta={beta:g}: closed-form ratio {closed!r}")
        quad = naive_doppler_force_quadrature(p, v).force[2] / friction_force_quadrature_unprimed(p, v).force[2]
        r.expect(abs(quad * 3.0 - 1.0) <= 1e-10, f"beta={beta:g}: quadrature ratio {quad!r}")
    return r


def check_friction_law() -> CheckResult:
    r = CheckResult(2, "friction law and three-route agreement", limit=10.0)
    p = _isotropic()
    discrepancy = {}
    for beta in BETAS + tuple(b / 2 for b in BETAS[1:]):
        v = Velocity.from_beta(beta)
        closed = friction_force(p, v).force
        expected = -(CODATA2018.hbar * OMEGA0 / C_SI**2) * GAMMA * v.as_array()
        tol = max(1e-12, 5.0 * beta**2)
        unprimed = friction_force_quadrature_unprimed(p, v).force
        primed = friction_force_quadrature_primed(p, v).force
        discrepancy[beta] = _rel(primed, unprimed)
        if beta in BETAS:
            r.expect(_rel(closed, expected) <= 1e-15, f"beta={beta:g}: closed form matches -(hbar w0/c^2) G v")
            r.expect(_rel(unprimed, closed) <= tol, f"beta={beta:g}: unprimed rel err {_rel(unprimed, closed):.2e} <= {tol:.1e}")
            r.expect(_rel(primed, closed) <= tol, f"beta={beta:g}: primed rel err {_rel(primed, closed):.2e} <= {tol:.1e}")
    for beta in BETAS[1:]:
        ratio = discrepancy[beta] / discrepancy[beta / 2]
        r.expect(abs(ratio - 4.0) <= 0.2, f"beta={beta:g} -> {beta / 2:g}: theta/theta' discrepancy shrinks x{ratio:.3f}")
    return r


def check_monte_carlo() -> CheckResult:
    r = CheckResult(3, "Monte Carlo agrees with closed form", limit=60.0)
    p = _isotropic()
    v = Velocity.from_beta(1e-3)
    closed = friction_force(p, v).force
    res = friction_force_montecarlo(p, v, mc=McSpec(1_000_000, seed=12345, antithetic=True))
    for i, axis in enumerate("xyz"):
        dev = abs(res.force[i] - closed[i])
        r.expect(dev <= 3.0 * res.stderr[i], f"antithetic {axis}: |dF| = {dev:.3e} N vs 3 stderr = {3 * res.stderr[i]:.3e} N")
    frac = float(np.linalg.norm(res.stderr) / np.linalg.norm(closed))
    r.expect(frac < 0.01, f"antithetic |stderr|/|F| = {frac:.2e} < 1%")
    ns = np.array([1e4, 1e5, 1e6])
    errs = []
    for n in ns:
        plain = friction_force_montecarlo(p, v, mc=McSpec(int(n), seed=12345, antithetic=False))
        errs.append(plain.stderr[2])
    slope = float(np.polyfit(np.log(ns), np.log(errs), 1)[0])
    r.expect(abs(slope + 0.5) <= 0.05, f"plain-sampling stderr ~ N^{slope:.3f} (target -0.5 +/- 0.05)")
    return r


def check_pattern_independence() -> CheckResult:
    r = CheckResult(4, "friction force independent of emission pattern", limit=10.0)
    rng = np.random.default_rng(2024)
    v = Velocity(120.0, -40.0, 300.0)
    ref = friction_force(_isotropic(), v).force
    patterns = {"isotropic": _isotropic()}
    for i in range(3):
        axis = rng.normal(size=3)
        patterns[f"dipole axis {i}"] = EmissionPattern(OMEGA0, GAMMA, DipoleDensity(axis))
    patterns["tabulated"] = EmissionPattern(OMEGA0, GAMMA, smooth_symmetric_table())
    for name, p in patterns.items():
        closed = friction_force(p, v).force
        quad = friction_force_quadrature_unprimed(p, v).force
        r.expect(_rel(closed, ref) <= 1e-10, f"{name}: closed form rel diff {_rel(closed, ref):.1e}")
        r.expect(_rel(quad, ref) <= 1e-10, f"{name}: quadrature rel diff {_rel(quad, ref):.1e}")
    return r


def check_rest_frame_null() -> CheckResult:
    r = CheckResult(5, "no recoil at rest for symmetric patterns", limit=1.0)
    scale = CODATA2018.hbar * OMEGA0 / C_SI * GAMMA
    rng = np.random.default_rng(7)
    patterns = [("isotropic", _isotropic()), ("dipole z", EmissionPattern.dipole(OMEGA0, GAMMA))]
    patterns += [(f"dipole random {i}", EmissionPattern.dipole(OMEGA0, GAMMA, rng.normal(size=3))) for i in range(3)]
    for name, p in patterns:
        mag = rest_frame_force(p).magnitude()
        r.expect(mag <= 1e-14 * scale, f"{name}: |F_rest| = {mag:.2e} N <= {1e-14 * scale:.2e} N")
    return r


def _yb_scenario(branch: str) -> DecayScenario:
    ion = get_ion("yb171")
    return DecayScenario(branch, ion.omega0, GAMMA, AtomState(ion.mass, Velocity(3.0, -1.0, 250.0)))


def check_mass_resolution() -> CheckResult:
    r = CheckResult(6, "mass loss resolves the friction paradox", limit=5.0)
    sv = _yb_scenario("constant_velocity")
    sm = _yb_scenario("constant_mass")
    dm = mass_excess_analytic(sv, math.inf)
    r.expect(dm == -CODATA2018.hbar * sv.omega0 / C_SI**2, f"m(inf) - m(0) = {dm!r} kg == -hbar w0 / c^2")
    dt, n = 1e-3 / GAMMA, 20_000
    tv = integrate_scenario(sv, dt, n)
    err_m = abs(tv.mass_excess[-1] / mass_excess_analytic(sv, tv.times[-1]) - 1.0)
    r.expect(err_m <= 1e-9, f"RK4 mass excess rel err {err_m:.1e} at G dt = 1e-3")
    tm = integrate_scenario(sm, dt, n)
    exact_dv = velocity_excess_analytic(sm, tm.times[-1])
    err_v = _rel(tm.velocity_excess[-1], exact_dv)
    r.expect(err_v <= 1e-9, f"RK4 velocity excess rel err {err_v:.1e} at G dt = 1e-3")
    for s in (sv, sm):
        f0 = float(np.linalg.norm(s.force(0.0)))
        worst = max(float(np.linalg.norm(newton_residual(s, t / GAMMA))) for t in (0.0, 1.0, 5.0))
        r.expect(worst <= 1e-8 * f0, f"{s.branch.value}: max Newton residual {worst / f0:.1e} |F(0)|")
    v0 = sm.initial.velocity.as_array()
    dv_inf = velocity_excess_analytic(sm, math.inf)
    expected = math.expm1(-sm.epsilon) * v0
    r.expect(_rel(dv_inf, expected) <= 1e-15, f"v(inf) - v(0) = expm1(-eps) v(0), eps = {sm.epsilon:.4e}")
    return r


def check_ion_chain() -> CheckResult:
    r = CheckResult(7, "Yb+ trap numbers with eps = 1.36e-11", limit=1.0)
    rep = feasibility_report(TrapSpec.from_mhz(1.3), get_ion("yb171"), epsilon=PUBLISHED_EPSILON_YB171)
    r.expect(abs(rep.period_count / 7.4e10 - 1) <= 0.01, f"period count {rep.period_count:.4e} vs 7.4e10 (1%)")
    r.expect(abs(rep.separation_time / 5.7e4 - 1) <= 0.01, f"T = {rep.separation_time:.4e} s vs 5.7e4 s (1%)")
    r.expect(abs(rep.separation_hours / 15.0 - 1) <= 0.05, f"T = {rep.separation_hours:.2f} h vs 15 h (5%)")
    r.expect(rep.feasible, "excited-state lifetime exceeds T")
    return r


def check_impulse() -> CheckResult:
    r = CheckResult(8, "time-integrated force equals -(hbar w0/c^2) v", limit=1.0)
    v = Velocity(0.0, 0.0, 1.0)
    for p in (_isotropic(), EmissionPattern.dipole(OMEGA0, GAMMA, (1.0, 1.0, 0.0))):
        j = impulse(p, v)
        expected = -CODATA2018.hbar * OMEGA0 / C_SI**2 * v.as_array()
        r.expect(_rel(j, expected) <= 1e-15, f"{p.angular.kind}: impulse {j[2]:.6e} kg m/s")
        fz = lambda t, p=p: friction_force(p, v, t).force[2]  # noqa: E731
        numeric, _ = integrate.quad(fz, 0.0, 50.0 / p.gamma_total, epsabs=0.0, epsrel=1e-13, limit=200)
        r.expect(abs(numeric / j[2] - 1.0) <= 1e-10, f"{p.angular.kind}: time quadrature rel diff {abs(numeric / j[2] - 1):.1e}")
    return r


def check_determinism() -> CheckResult:
    r = CheckResult(9, "Monte Carlo bit-identical across worker counts", limit=60.0)
    p = EmissionPattern.dipole(OMEGA0, GAMMA, (0.3, 0.4, 0.5))
    v = Velocity.from_beta(1e-3, (1.0, 2.0, 2.0))
    for anti in (True, False):
        spec = McSpec(1_000_000, seed=42, antithetic=anti)
        runs = [friction_force_montecarlo(p, v, mc=spec, workers=w) for w in (1, 1, 2, 4, 7)]
        same = all(np.array_equal(x.force, runs[0].force) and np.array_equal(x.stderr, runs[0].stderr) for x in runs)
        r.expect(same, f"antithetic={anti}: workers 1, 1, 2, 4, 7 agree bit for bit")
    return r


CHECKS = (
    check_naive_ratio,
    check_friction_law,
    check_monte_carlo,
    check_pattern_independence,
    check_rest_frame_null,
    check_mass_resolution,
    check_ion_chain,
    check_impulse,
    check_determinism,
)


def run_check(check) -> CheckResult:
    start = time.perf_counter()
    result = check()
    result.seconds = time.perf_counter() - start
    result.expect(result.seconds < result.limit, f"runtime {result.seconds:.2f} s < {result.limit:g} s")
    return result


def run_all(verbose: bool = False, stream=None) -> list[CheckResult]:
    results = []
    for check in CHECKS:
        res = run_check(check)
        results.append(res)
        if stream is not None:
            print(res.line(), file=stream)
            if verbose or not res.passed:
                for d in res.details:
                    print(f"    {d}", file=stream)
    return results
