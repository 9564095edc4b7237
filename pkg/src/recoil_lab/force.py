"""Ensemble-averaged recoil force on a moving spontaneous emitter.

Every evaluator returns the instantaneous mean force at time ``t`` after
preparation in the excited state, i.e. it carries the survival factor
exp(-gamma t). The time integral is :func:`impulse`.

Routes to the moving-frame force:

* ``friction_force``: closed form -exp(-gamma t) (hbar omega0 / c^2) gamma v
* ``friction_force_quadrature_unprimed``: integrate -hbar k' over
  rest-frame emission angles, with k' from the wavevector transform
* ``friction_force_quadrature_primed``: integrate over lab-frame angles
  with the solid-angle Jacobian
* ``friction_force_montecarlo``: sample rest-frame directions and average

``naive_doppler_force`` is the Doppler-only estimate that leaves out
aberration; it comes out at one third of the correct value.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constants import C_SI, CODATA2018, PhysicalConstants
from .errors import DomainError, ParityViolationError
from .kinematics import Tier, Velocity, boost_wavevectors, lorentz_factor
from .patterns import EmissionPattern, IsotropicDensity, survival_probability
from .quadrature import QuadratureSpec, sphere_grid

__all__ = [
    "ForceResult",
    "McSpec",
    "QuadratureSpec",
    "PARITY_TOL",
    "MC_CHUNK",
    "rest_frame_force",
    "check_parity",
    "naive_doppler_force",
    "naive_doppler_force_quadrature",
    "friction_force",
    "friction_force_quadrature_unprimed",
    "friction_force_quadrature_primed",
    "friction_force_montecarlo",
    "impulse",
    "friction_scale",
]

METHODS = ("closed_form", "quadrature_unprimed", "quadrature_primed", "monte_carlo", "naive")
PARITY_TOL = 1e-9
MC_CHUNK = 1 << 16  # samples per independently seeded chunk


@dataclass(frozen=True)
class ForceResult:
    """Force in newtons with the route that produced it.

    ``stderr`` is the per-component standard error of the Monte Carlo mean
    and zero for deterministic routes.
    """

    force: np.ndarray
    method: str
    stderr: np.ndarray = field(default_factory=lambda: np.zeros(3))
    samples: int = 0
    tier: str = Tier.FIRST_ORDER.value

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}")
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float).reshape(3))
        object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float).reshape(3))
        if np.any(self.stderr < 0):
            raise ValueError("stderr components must be non-negative")
        if self.method == "monte_carlo" and self.samples <= 0:
            raise ValueError("a Monte Carlo result needs a positive sample count")

    def magnitude(self) -> float:
        return float(np.linalg.norm(self.force))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "tier": self.tier,
            "force_N": [float(x) for x in self.force],
            "stderr_N": [float(x) for x in self.stderr],
            "samples": int(self.samples),
        }


@dataclass(frozen=True)
class McSpec:
    n_samples: int = 1_000_000
    seed: int = 0
    antithetic: bool = True

    def __post_init__(self):
        n = int(self.n_samples)
        if n < 1:
            raise DomainError("n_samples must be positive")
        if self.antithetic and (n < 2 or n % 2):
            raise DomainError("antithetic sampling needs an even n_samples >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "n_samples", n)
        object.__setattr__(self, "seed", int(self.seed))


def friction_scale(p: EmissionPattern, constants: PhysicalConstants = CODATA2018) -> float:
    """hbar omega0 gamma / c^2, the friction coefficient in kg/s."""
    return constants.hbar * p.omega0 * p.gamma_total / C_SI**2


def _recoil_scale(p: EmissionPattern, constants: PhysicalConstants) -> float:
    """hbar (omega0 / c) gamma, the natural unit of the rest-frame recoil."""
    return constants.hbar * p.omega0 / C_SI * p.gamma_total


def _velocity_array(v) -> np.ndarray:
    return (v if isinstance(v, Velocity) else Velocity.from_array(v)).as_array()


def rest_frame_force(
    p: EmissionPattern,
    t: float = 0.0,
    q: QuadratureSpec | None = None,
    constants: PhysicalConstants = CODATA2018,
) -> ForceResult:
    """Mean recoil of an emitter at rest. Vanishes for parity-symmetric patterns."""
    rule = p.angular.rule(q)
    mean_n = rule.integrate(rule.dirs)
    force = -survival_probability(p.gamma_total, t) * _recoil_scale(p, constants) * mean_n
    return ForceResult(force, "quadrature_unprimed")


def check_parity(p: EmissionPattern, constants: PhysicalConstants = CODATA2018) -> None:
    """Raise ParityViolationError if the rest-frame recoil is not negligible."""
    scale = _recoil_scale(p, constants)
    residual = rest_frame_force(p, 0.0, constants=constants).magnitude()
    if residual > PARITY_TOL * scale:
        raise ParityViolationError(
            f"rest-frame recoil {residual:.3e} N exceeds {PARITY_TOL:g} x hbar omega0 gamma / c; "
            "the friction law does not apply to this pattern"
        )


def naive_doppler_force(
    p: EmissionPattern, v: Velocity, t: float = 0.0, constants: PhysicalConstants = CODATA2018
) -> ForceResult:
    """Doppler shift without aberration, isotropic emitter: -(1/3) exp(-gamma t) (hbar omega0/c^2) gamma v."""
    if not isinstance(p.angular, IsotropicDensity):
        raise DomainError("the 1/3 Doppler-only force is derived for isotropic emission only")
    va = _velocity_array(v)
    force = -survival_probability(p.gamma_total, t) * friction_scale(p, constants) * va / 3.0
    return ForceResult(force, "naive")


def naive_doppler_force_quadrature(
    p: EmissionPattern,
    v: Velocity,
    t: float = 0.0,
    q: QuadratureSpec | None = None,
    constants: PhysicalConstants = CODATA2018,
) -> ForceResult:
    """Integrate -hbar (omega0/c)(1 + beta cos theta) n over the pattern, no aberration."""
    va = _velocity_array(v)
    rule = p.angular.rule(q)
    doppler = 1.0 + rule.dirs @ va / C_SI
    mean_k = rule.integrate(doppler[:, None] * rule.dirs)
    force = -survival_probability(p.gamma_total, t) * _recoil_scale(p, constants) * mean_k
    return ForceResult(force, "naive")


def friction_force(
    p: EmissionPattern, v: Velocity, t: float = 0.0, constants: PhysicalConstants = CODATA2018
) -> ForceResult:
    """Closed-form friction -exp(-gamma t) (hbar omega0 / c^2) gamma v.

    Independent of the angular shape, provided the rest-frame recoil vanishes.
    """
    check_parity(p, constants)
    va = _velocity_array(v)
    force = -survival_probability(p.gamma_total, t) * friction_scale(p, constants) * va
    return ForceResult(force, "closed_form")


def friction_force_quadrature_unprimed(
    p: EmissionPattern,
    v: Velocity,
    t: float = 0.0,
    q: QuadratureSpec | None = None,
    tier: Tier | str = Tier.FIRST_ORDER,
    constants: PhysicalConstants = CODATA2018,
) -> ForceResult:
    """Integrate -hbar k' over rest-frame emission directions."""
    tier = Tier.coerce(tier)
    check_parity(p, constants)
    va = _velocity_array(v)
    rule = p.angular.rule(q)
    # work in units of omega0/c so the integrand is O(1)
    k_prime = boost_wavevectors(rule.dirs, va, tier)
    mean_k = rule.integrate(k_prime)
    force = -survival_probability(p.gamma_total, t) * _recoil_scale(p, constants) * mean_k
    return ForceResult(force, "quadrature_unprimed", tier=tier.value)


def friction_force_quadrature_primed(
    p: EmissionPattern,
    v: Velocity,
    t: float = 0.0,
    q: QuadratureSpec | None = None,
    tier: Tier | str = Tier.FIRST_ORDER,
    constants: PhysicalConstants = CODATA2018,
) -> ForceResult:
    """Integrate over lab-frame directions theta' with the Jacobian (1 + beta cos theta)^2.

    Each lab node is mapped back to its rest-frame angle with the exact
    inverse aberration; the rate there is weighted by the Jacobian. In the
    first-order tier the photon frequency is omega0 (1 + beta cos theta) and
    the Jacobian drops its 1/(1 - beta^2) factor.
    """
    tier = Tier.coerce(tier)
    check_parity(p, constants)
    va = _velocity_array(v)
    speed = float(np.linalg.norm(va))
    beta = speed / C_SI
    axis = va / speed if speed > 0 else np.array([0.0, 0.0, 1.0])
    q = q or QuadratureSpec()
    dirs_lab, cos_lab, w = sphere_grid(q, axis)
    cos_rest = (cos_lab - beta) / (1.0 - beta * cos_lab)
    # the azimuth about the motion axis is unchanged by aberration
    sin_lab = np.sqrt(np.clip(1.0 - cos_lab**2, 0.0, None))
    sin_rest = np.sqrt(np.clip(1.0 - cos_rest**2, 0.0, None))
    perp = dirs_lab - cos_lab[:, None] * axis
    with np.errstate(invalid="ignore", divide="ignore"):
        perp_unit = np.where(sin_lab[:, None] > 0, perp / sin_lab[:, None], 0.0)
    dirs_rest = cos_rest[:, None] * axis + sin_rest[:, None] * perp_unit
    shift = 1.0 + beta * cos_rest
    jac = shift**2
    if tier is Tier.EXACT:
        gamma = lorentz_factor(beta)
        shift = gamma * shift
        jac = jac / ((1.0 - beta) * (1.0 + beta))
    weight = w * p.angular.density(dirs_rest) * jac
    # no paired summation: the lab grid is not parity symmetric once beta > 0
    integrand = (weight * shift)[:, None] * dirs_lab
    mean_k = np.ascontiguousarray(integrand.T).sum(axis=-1)
    force = -survival_probability(p.gamma_total, t) * _recoil_scale(p, constants) * mean_k
    return ForceResult(force, "quadrature_primed", tier=tier.value)


def _mc_chunk(p: EmissionPattern, va: np.ndarray, tier: Tier, seed: int, chunk: int, size: int, antithetic: bool):
    """Per-chunk (count, mean, M2) of k' (units of omega0/c), one term per independent draw."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(chunk,))
    rng = np.random.Generator(np.random.Philox(ss))
    if antithetic:
        n = p.angular.sample(rng, size // 2)
        # each pair mean is one independent observation
        obs = 0.5 * (boost_wavevectors(n, va, tier) + boost_wavevectors(-n, va, tier))
    else:
        obs = boost_wavevectors(p.angular.sample(rng, size), va, tier)
    # sum along a contiguous axis so numpy uses pairwise summation
    cols = np.ascontiguousarray(obs.T)
    mean = cols.sum(axis=-1) / cols.shape[-1]
    m2 = ((cols - mean[:, None]) ** 2).sum(axis=-1)
    return cols.shape[-1], mean, m2


def friction_force_montecarlo(
    p: EmissionPattern,
    v: Velocity,
    t: float = 0.0,
    mc: McSpec | None = None,
    tier: Tier | str = Tier.FIRST_ORDER,
    workers: int = 1,
    constants: PhysicalConstants = CODATA2018,
) -> ForceResult:
    """Sample photon directions from the rest-frame pattern and average -hbar k'.

    Samples are split into fixed chunks of ``MC_CHUNK`` draws, each seeded
    from (seed, chunk index) and reduced in chunk order, so the result does
    not depend on ``workers``. With antithetic pairing every direction n is
    paired with -n and the standard error is estimated from the pair means.
    """
    tier = Tier.coerce(tier)
    mc = mc or McSpec()
    if mc.antithetic:
        check_parity(p, constants)
    va = _velocity_array(v)
    n_total = mc.n_samples
    sizes = [MC_CHUNK] * (n_total // MC_CHUNK)
    if n_total % MC_CHUNK:
        sizes.append(n_total % MC_CHUNK)
    jobs = [(p, va, tier, mc.seed, i, size, mc.antithetic) for i, size in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _mc_chunk(*a), jobs))
    else:
        parts = [_mc_chunk(*a) for a in jobs]
    # Chan et al. pairwise update, applied in chunk order
    count, mean, m2 = parts[0]
    for nb, mb, m2b in parts[1:]:
        tot = count + nb
        delta = mb - mean
        mean = mean + delta * (nb / tot)
        m2 = m2 + m2b + delta**2 * (count * nb / tot)
        count = tot
    scale = survival_probability(p.gamma_total, t) * _recoil_scale(p, constants)
    var = m2 / (count - 1) if count > 1 else np.zeros(3)
    stderr = scale * np.sqrt(var / count)
    return ForceResult(-scale * mean, "monte_carlo", stderr=stderr, samples=n_total, tier=tier.value)


def impulse(
    p: EmissionPattern,
    v: Velocity,
    until: float = math.inf,
    constants: PhysicalConstants = CODATA2018,
) -> np.ndarray:
    """Momentum delivered between t=0 and ``until``: -(hbar omega0 / c^2)(1 - exp(-gamma until)) v."""
    check_parity(p, constants)
    if until < 0:
        raise DomainError("until must be non-negative")
    va = _velocity_array(v)
    delivered = -math.expm1(-p.gamma_total * until)
    return -(constants.hbar * p.omega0 / C_SI**2) * delivered * va
