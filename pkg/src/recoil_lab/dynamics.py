"""Newton's second law under the emission friction force.

Two readings of F = d(mv)/dt are integrated side by side:

* ``constant_mass``: the force decelerates the atom, v(inf) = exp(-eps) v(0)
* ``constant_velocity``: the atom keeps its velocity and loses rest mass,
  m(inf) - m(0) = -hbar omega0 / c^2

eps = hbar omega0 / (m c^2) is of order 1e-11, so both trajectories are
carried as excesses (dm, dv) over the initial state. Adding such an excess
to m(0) throws away most of its digits.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .constants import C_SI, CODATA2018, PhysicalConstants
from .errors import BranchMismatchError, DomainError
from .kinematics import Velocity

__all__ = [
    "Branch",
    "AtomState",
    "DecayScenario",
    "Trajectory",
    "fractional_speed_loss",
    "mass_loss",
    "velocity_trajectory_analytic",
    "velocity_excess_analytic",
    "mass_trajectory_analytic",
    "mass_excess_analytic",
    "integrate_scenario",
    "rk4_step",
    "newton_residual",
    "TRAJECTORY_COLUMNS",
]

TRAJECTORY_COLUMNS = ("t_s", "mass_excess_kg", "vx", "vy", "vz", "excited_prob")
STEP_WARN = 0.1  # gamma * dt above which RK4 accuracy degrades visibly
FD_STEP = 1e-6  # newton_residual finite-difference step, in units of 1/gamma


class Branch(str, Enum):
    CONSTANT_MASS = "constant_mass"
    CONSTANT_VELOCITY = "constant_velocity"

    @classmethod
    def coerce(cls, value: "Branch | str") -> "Branch":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            raise DomainError(f"unknown branch {value!r}") from None


@dataclass(frozen=True)
class AtomState:
    """Mean state of the emitter ensemble.

    ``mass`` is the rest mass at preparation; ``mass_excess`` is the change
    since then, kept separately for precision.
    """

    mass: float
    velocity: Velocity
    time: float = 0.0
    excited_prob: float = 1.0
    mass_excess: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError("mass must be positive")
        if not 0.0 <= self.excited_prob <= 1.0:
            raise DomainError("excited_prob must lie in [0, 1]")

    @property
    def total_mass(self) -> float:
        return self.mass + self.mass_excess


@dataclass(frozen=True)
class DecayScenario:
    branch: Branch
    omega0: float
    gamma_total: float
    initial: AtomState
    constants: PhysicalConstants = field(default=CODATA2018, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "branch", Branch.coerce(self.branch))
        if not self.omega0 >= 0:
            raise DomainError("omega0 must be non-negative")
        if not self.gamma_total > 0:
            raise DomainError("gamma_total must be positive")
        if self.initial.excited_prob != 1.0 or self.initial.time != 0.0:
            raise DomainError("the scenario starts fully excited at t = 0")
        if self.initial.mass_excess != 0.0:
            raise DomainError("the initial state carries no mass excess")

    @property
    def mass_defect(self) -> float:
        """hbar omega0 / c^2, the mass carried off by one photon."""
        return mass_loss(self.omega0, self.constants)

    @property
    def epsilon(self) -> float:
        return fractional_speed_loss(self.omega0, self.initial.mass, self.constants)

    def force(self, t: float, v: np.ndarray | None = None) -> np.ndarray:
        """Friction force at time t for velocity v (default: the initial velocity)."""
        va = self.initial.velocity.as_array() if v is None else v
        return -math.exp(-self.gamma_total * t) * self.mass_defect * self.gamma_total * va


def mass_loss(omega0: float, constants: PhysicalConstants = CODATA2018) -> float:
    return constants.hbar * omega0 / C_SI**2


def fractional_speed_loss(omega0: float, mass: float, constants: PhysicalConstants = CODATA2018) -> float:
    """eps = hbar omega0 / (m c^2)."""
    if not mass > 0:
        raise DomainError("mass must be positive")
    return constants.hbar * omega0 / (mass * C_SI**2)


def _emitted_fraction(gamma: float, t: float) -> float:
    # 1 - exp(-gamma t), accurate for small gamma t; exactly 1 at t = inf
    return -math.expm1(-gamma * t)


def _check_branch(s: DecayScenario, branch: Branch):
    if s.branch is not branch:
        raise BranchMismatchError(f"operation needs a {branch.value} scenario, got {s.branch.value}")


def _check_time(t: float):
    if not t >= 0:
        raise DomainError("time must be non-negative")


def velocity_excess_analytic(s: DecayScenario, t: float) -> np.ndarray:
    """v(t) - v(0) on the constant-mass branch."""
    _check_branch(s, Branch.CONSTANT_MASS)
    _check_time(t)
    return math.expm1(-s.epsilon * _emitted_fraction(s.gamma_total, t)) * s.initial.velocity.as_array()


def velocity_trajectory_analytic(s: DecayScenario, t: float) -> Velocity:
    """v(t) = v(0) exp[-eps (1 - exp(-gamma t))]."""
    dv = velocity_excess_analytic(s, t)
    return Velocity.from_array(s.initial.velocity.as_array() + dv)


def mass_excess_analytic(s: DecayScenario, t: float) -> float:
    """m(t) - m(0) on the constant-velocity branch."""
    _check_branch(s, Branch.CONSTANT_VELOCITY)
    _check_time(t)
    return -s.mass_defect * _emitted_fraction(s.gamma_total, t)


def mass_trajectory_analytic(s: DecayScenario, t: float) -> float:
    """m(t) = m(0) - (hbar omega0 / c^2)(1 - exp(-gamma t)), in kg.

    The absolute mass cannot resolve the excess to better than about 1e-5
    relative; use :func:`mass_excess_analytic` for the change itself.
    """
    return s.initial.mass + mass_excess_analytic(s, t)


def rk4_step(f, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class Trajectory:
    """Time series of the ensemble-mean state, stored column-wise."""

    branch: Branch
    step: float
    initial_mass: float
    times: np.ndarray
    mass_excess: np.ndarray
    velocities: np.ndarray
    excited_prob: np.ndarray
    velocity_excess: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> AtomState:
        return AtomState(
            mass=self.initial_mass,
            velocity=Velocity.from_array(self.velocities[i]),
            time=float(self.times[i]),
            excited_prob=float(self.excited_prob[i]),
            mass_excess=float(self.mass_excess[i]),
        )

    def states(self):
        return (self.state(i) for i in range(len(self)))

    def write_csv(self, target: str | Path | io.TextIOBase) -> None:
        """Columns t_s, mass_excess_kg, vx, vy, vz, excited_prob; 17 significant digits."""
        if isinstance(target, (str, Path)):
            with open(target, "w", newline="", encoding="utf-8") as fh:
                self.write_csv(fh)
            return
        w = csv.writer(target, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for i in range(len(self)):
            row = (self.times[i], self.mass_excess[i], *self.velocities[i], self.excited_prob[i])
            w.writerow([f"{float(x):.17g}" for x in row])


def integrate_scenario(s: DecayScenario, dt: float, n_steps: int) -> Trajectory:
    """Classical RK4 on the branch's free variable (velocity or mass excess).

    Warns when gamma * dt exceeds 0.1.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    n_steps = int(n_steps)
    if n_steps < 1:
        raise DomainError("n_steps must be at least 1")
    gamma = s.gamma_total
    if gamma * dt > STEP_WARN:
        warnings.warn(f"gamma*dt = {gamma * dt:.3g} > {STEP_WARN}; RK4 step is coarse", stacklevel=2)
    v0 = s.initial.velocity.as_array()
    times = dt * np.arange(n_steps + 1)
    if s.branch is Branch.CONSTANT_MASS:
        eps = s.epsilon

        def rhs(t, dv):
            return -eps * gamma * math.exp(-gamma * t) * (v0 + dv)

        y = np.zeros(3)
        excess = np.zeros((n_steps + 1, 3))
        for i in range(n_steps):
            y = rk4_step(rhs, times[i], y, dt)
            excess[i + 1] = y
        velocities = v0 + excess
        mass_excess = np.zeros(n_steps + 1)
        velocity_excess = excess
    else:
        rate = s.mass_defect * gamma

        def rhs(t, dm):
            return np.array([-rate * math.exp(-gamma * t)])

        y = np.zeros(1)
        mass_excess = np.zeros(n_steps + 1)
        for i in range(n_steps):
            y = rk4_step(rhs, times[i], y, dt)
            mass_excess[i + 1] = y[0]
        velocities = np.broadcast_to(v0, (n_steps + 1, 3)).copy()
        velocity_excess = np.zeros((n_steps + 1, 3))
    return Trajectory(
        branch=s.branch,
        step=dt,
        initial_mass=s.initial.mass,
        times=times,
        mass_excess=mass_excess,
        velocities=velocities,
        excited_prob=np.exp(-gamma * times),
        velocity_excess=velocity_excess,
    )


def _momentum_excess(s: DecayScenario, t: float) -> np.ndarray:
    """m(t) v(t) - m(0) v(0) along the analytic trajectory."""
    v0 = s.initial.velocity.as_array()
    if s.branch is Branch.CONSTANT_MASS:
        return s.initial.mass * velocity_excess_analytic(s, t)
    return mass_excess_analytic(s, t) * v0


def newton_residual(s: DecayScenario, t: float) -> np.ndarray:
    """d(mv)/dt - F along the analytic trajectory, by central differences.

    The step is fixed at 1e-6/gamma; near t = 0 the stencil is shifted
    forward so it never samples negative times.
    """
    _check_time(t)
    h = FD_STEP / s.gamma_total
    p = lambda tau: _momentum_excess(s, tau)  # noqa: E731
    if t >= h:
        dp = (p(t + h) - p(t - h)) / (2.0 * h)
    else:
        dp = (-3.0 * p(t) + 4.0 * p(t + h) - p(t + 2.0 * h)) / (2.0 * h)
    if s.branch is Branch.CONSTANT_MASS:
        v = s.initial.velocity.as_array() + velocity_excess_analytic(s, t)
    else:
        v = s.initial.velocity.as_array()
    return dp - s.force(t, v)
