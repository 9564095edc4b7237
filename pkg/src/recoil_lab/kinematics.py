"""Vector primitives plus the Doppler, aberration and wavevector transforms.

Two accuracy tiers are offered wherever they differ. ``first_order`` keeps
terms linear in beta = v/c; ``exact`` uses the full special-relativistic
expressions and serves as the error yardstick for the first-order tier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constants import C_SI
from .errors import ConvergenceError, DomainError

__all__ = [
    "Tier",
    "Velocity",
    "Direction",
    "WaveVector",
    "lorentz_factor",
    "doppler_frequency",
    "aberrate_cos",
    "aberrate_exact",
    "deaberrate_exact",
    "aberrate_first_order",
    "aberrate_bradley",
    "solid_angle_jacobian",
    "transform_wavevector",
    "transform_wavevector_spherical",
    "boost_wavevectors",
    "orthonormal_frame",
]

BRADLEY_MAX_ITER = 100
BRADLEY_TOL = 1e-14


class Tier(str, Enum):
    FIRST_ORDER = "first_order"
    EXACT = "exact"

    @classmethod
    def coerce(cls, value: "Tier | str") -> "Tier":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            raise DomainError(f"unknown accuracy tier {value!r}") from None


@dataclass(frozen=True)
class Velocity:
    """Emitter velocity in m/s."""

    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0

    def __post_init__(self):
        for name in ("vx", "vy", "vz"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"velocity component {name} is not finite")
            object.__setattr__(self, name, value)
        if self.speed() >= C_SI:
            raise DomainError(f"speed {self.speed()!r} m/s is not below c")

    @classmethod
    def from_array(cls, v) -> "Velocity":
        vx, vy, vz = (float(x) for x in np.asarray(v, dtype=float).reshape(3))
        return cls(vx, vy, vz)

    @classmethod
    def from_beta(cls, beta: float, axis=(0.0, 0.0, 1.0)) -> "Velocity":
        return cls.from_array(beta * C_SI * Direction.from_array(axis).as_array())

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.vz])

    def speed(self) -> float:
        return math.sqrt(self.vx**2 + self.vy**2 + self.vz**2)

    def beta(self) -> float:
        return self.speed() / C_SI

    def gamma(self) -> float:
        return lorentz_factor(self.beta())

    def __mul__(self, factor: float) -> "Velocity":
        return Velocity.from_array(self.as_array() * factor)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Direction:
    """Unit vector. Normalized on construction."""

    nx: float
    ny: float
    nz: float

    def __post_init__(self):
        n = np.array([self.nx, self.ny, self.nz], dtype=float)
        norm = float(np.linalg.norm(n))
        if not math.isfinite(norm) or norm == 0.0:
            raise DomainError("direction must be a finite non-zero vector")
        n = n / norm
        object.__setattr__(self, "nx", float(n[0]))
        object.__setattr__(self, "ny", float(n[1]))
        object.__setattr__(self, "nz", float(n[2]))

    @classmethod
    def from_array(cls, n) -> "Direction":
        nx, ny, nz = (float(x) for x in np.asarray(n, dtype=float).reshape(3))
        return cls(nx, ny, nz)

    @classmethod
    def from_angles(cls, theta: float, phi: float = 0.0) -> "Direction":
        s = math.sin(theta)
        return cls(s * math.cos(phi), s * math.sin(phi), math.cos(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz])

    @property
    def cos_theta(self) -> float:
        return self.nz

    def __neg__(self) -> "Direction":
        return Direction(-self.nx, -self.ny, -self.nz)


@dataclass(frozen=True)
class WaveVector:
    """Photon wavevector in rad/m; the frequency follows from omega = c|k|."""

    kx: float
    ky: float
    kz: float

    @classmethod
    def from_array(cls, k) -> "WaveVector":
        kx, ky, kz = (float(x) for x in np.asarray(k, dtype=float).reshape(3))
        return cls(kx, ky, kz)

    @classmethod
    def from_direction(cls, n: Direction, omega: float) -> "WaveVector":
        if omega < 0:
            raise DomainError("omega must be non-negative")
        return cls.from_array(n.as_array() * (omega / C_SI))

    def as_array(self) -> np.ndarray:
        return np.array([self.kx, self.ky, self.kz])

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def omega(self) -> float:
        return C_SI * self.norm()


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0.0 <= beta < 1.0:
        raise DomainError(f"beta must lie in [0, 1), got {beta!r}")
    return beta


def _check_cos(cos_theta):
    if np.any(np.abs(cos_theta) > 1.0) or np.any(np.isnan(cos_theta)):
        raise DomainError("cos_theta must lie in [-1, 1]")
    return cos_theta


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"theta must lie in [0, pi], got {theta!r}")
    return theta


def lorentz_factor(beta: float) -> float:
    beta = _check_beta(beta)
    # 1/sqrt(1-b^2) written to keep full precision for tiny beta
    return 1.0 / math.sqrt((1.0 - beta) * (1.0 + beta))


def doppler_frequency(omega0, beta: float, cos_theta, tier: Tier | str = Tier.FIRST_ORDER):
    """Frequency seen in the lab for a photon emitted at angle theta to the motion.

    ``first_order`` returns omega0 (1 + beta cos theta). ``exact`` includes
    the Lorentz factor. ``cos_theta`` is the rest-frame emission angle and
    may be an array.
    """
    beta = _check_beta(beta)
    cos_theta = _check_cos(cos_theta)
    if np.any(np.asarray(omega0) < 0):
        raise DomainError("omega0 must be non-negative")
    factor = 1.0 + beta * cos_theta
    if Tier.coerce(tier) is Tier.EXACT:
        factor = lorentz_factor(beta) * factor
    return omega0 * factor


def aberrate_cos(cos_theta, beta: float):
    """Exact aberration on cosines. Returns (cos theta', sin theta')."""
    beta = _check_beta(beta)
    cos_theta = _check_cos(cos_theta)
    sin_theta = np.sqrt(np.clip(1.0 - cos_theta * cos_theta, 0.0, None))
    denom = 1.0 + beta * cos_theta
    cos_p = (cos_theta + beta) / denom
    sin_p = sin_theta / (lorentz_factor(beta) * denom)
    return cos_p, sin_p


def aberrate_exact(theta: float, beta: float) -> float:
    """Lab-frame angle theta' of a photon emitted at rest-frame angle theta."""
    theta = _check_theta(theta)
    beta = _check_beta(beta)
    ct, st = math.cos(theta), math.sin(theta)
    denom = 1.0 + beta * ct
    cos_p = (ct + beta) / denom
    sin_p = st / (lorentz_factor(beta) * denom)
    return math.atan2(sin_p, cos_p)


def deaberrate_exact(theta_prime: float, beta: float) -> float:
    """Inverse of :func:`aberrate_exact` (boost by -beta)."""
    theta_prime = _check_theta(theta_prime)
    beta = _check_beta(beta)
    ct, st = math.cos(theta_prime), math.sin(theta_prime)
    denom = 1.0 - beta * ct
    cos_r = (ct - beta) / denom
    sin_r = st / (lorentz_factor(beta) * denom)
    return math.atan2(sin_r, cos_r)


def aberrate_first_order(theta: float, beta: float) -> float:
    return _check_theta(theta) - _check_beta(beta) * math.sin(theta)


def aberrate_bradley(theta: float, beta: float) -> float:
    """Solve sin(theta - theta') = beta sin(theta') for theta'.

    Fixed-point iteration theta'_{n+1} = theta - arcsin(beta sin theta'_n)
    started from theta. Valid as a model only to first order in beta.
    """
    theta = _check_theta(theta)
    beta = _check_beta(beta)
    tp = theta
    for _ in range(BRADLEY_MAX_ITER):
        tp = theta - math.asin(beta * math.sin(tp))
        if abs(math.sin(theta - tp) - beta * math.sin(tp)) < BRADLEY_TOL:
            return tp
    raise ConvergenceError(
        f"Bradley aberration did not converge in {BRADLEY_MAX_ITER} iterations "
        f"(beta={beta!r} is too large for this branch)"
    )


def solid_angle_jacobian(cos_theta, beta: float, tier: Tier | str = Tier.FIRST_ORDER):
    """dOmega/dOmega' for rest-frame angle theta.

    The first-order value is (1 + beta cos theta)^2. The exact derivative
    carries an extra 1/(1 - beta^2).
    """
    beta = _check_beta(beta)
    cos_theta = _check_cos(cos_theta)
    jac = (1.0 + beta * cos_theta) ** 2
    if Tier.coerce(tier) is Tier.EXACT:
        jac = jac / ((1.0 - beta) * (1.0 + beta))
    return jac


def orthonormal_frame(axis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-handed (e1, e2, axis) with axis normalized."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(helper, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    return e1, e2, a


def boost_wavevectors(k: np.ndarray, v: np.ndarray, tier: Tier | str = Tier.FIRST_ORDER) -> np.ndarray:
    """Vectorized k -> k' for an emitter moving with velocity ``v`` (m/s).

    ``k`` has shape (..., 3). First order: k + omega v / c^2. Exact: the
    Lorentz boost of a null wavevector.
    """
    k = np.asarray(k, dtype=float)
    v = np.asarray(v, dtype=float)
    omega = C_SI * np.linalg.norm(k, axis=-1, keepdims=True)
    if Tier.coerce(tier) is Tier.FIRST_ORDER:
        return k + omega * v / C_SI**2
    speed = float(np.linalg.norm(v))
    if speed == 0.0:
        return k.copy()
    beta = speed / C_SI
    gamma = lorentz_factor(beta)
    vhat = v / speed
    k_par = k @ vhat
    k_par_new = gamma * (k_par + beta * omega[..., 0] / C_SI)
    return k + (k_par_new - k_par)[..., None] * vhat


def transform_wavevector(k: WaveVector, v: Velocity, tier: Tier | str = Tier.FIRST_ORDER) -> WaveVector:
    """Lab-frame wavevector of a photon emitted with rest-frame wavevector ``k``."""
    return WaveVector.from_array(boost_wavevectors(k.as_array(), v.as_array(), tier))


def transform_wavevector_spherical(k: WaveVector, v: Velocity) -> WaveVector:
    """k' as first-order Doppler magnitude times the exactly aberrated direction.

    Independent route to the same first-order result as the additive form of
    :func:`transform_wavevector`; the two differ at O(beta^2).
    """
    beta = v.beta()
    kv = k.as_array()
    knorm = float(np.linalg.norm(kv))
    if knorm == 0.0 or beta == 0.0:
        return WaveVector.from_array(kv)
    e1, e2, a = orthonormal_frame(v.as_array())
    n = kv / knorm
    cos_t = float(np.clip(n @ a, -1.0, 1.0))
    phi = math.atan2(float(n @ e2), float(n @ e1))
    cos_p, sin_p = aberrate_cos(cos_t, beta)
    omega_p = doppler_frequency(C_SI * knorm, beta, cos_t)
    n_p = cos_p * a + sin_p * (math.cos(phi) * e1 + math.sin(phi) * e2)
    return WaveVector.from_array(omega_p / C_SI * n_p)
