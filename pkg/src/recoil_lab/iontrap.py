"""Mass-dependent motional frequencies of a trapped ion.

An ion in an internal state with energy hbar omega0 above the ground state
is heavier by hbar omega0 / c^2, so in the same harmonic trap it oscillates
at Omega* = sqrt(kappa / (m + hbar omega0 / c^2)) instead of
Omega = sqrt(kappa / m). A ground/excited superposition dephases and the
two motional wave packets are first maximally apart after
T = pi / (Omega - Omega*).

eps = hbar omega0 / (m c^2) is around 1e-11, so Omega - Omega* is never
formed by subtraction; everything is written in terms of eps with
expm1/log1p.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

from .constants import C_SI, CODATA2018, PhysicalConstants
from .errors import DegenerateEpsilonError, DomainError

__all__ = [
    "IonSpec",
    "TrapSpec",
    "FeasibilityReport",
    "PUBLISHED_EPSILON_YB171",
    "MIN_EPSILON",
    "ion_epsilon",
    "excited_trap_frequency",
    "excited_trap_frequency_first_order",
    "frequency_splitting",
    "separation_time",
    "separation_time_first_order",
    "period_count",
    "phase_separation",
    "feasibility_report",
    "load_ion_catalog",
    "get_ion",
    "format_duration",
]

PUBLISHED_EPSILON_YB171 = 1.36e-11  # published value for the Yb+ 2F7/2 example
MIN_EPSILON = 1e-15  # below this Omega - Omega* is not resolvable in float64


@dataclass(frozen=True)
class IonSpec:
    """Ion mass (kg), transition frequency nu0 (Hz) and excited-state lifetime (s, may be inf)."""

    mass: float
    transition_frequency: float
    excited_lifetime: float = math.inf
    name: str = ""

    def __post_init__(self):
        if not self.mass > 0:
            raise DomainError("ion mass must be positive")
        if not self.transition_frequency > 0:
            raise DomainError("transition frequency must be positive")
        if not self.excited_lifetime > 0:
            raise DomainError("excited-state lifetime must be positive")

    @classmethod
    def from_amu(
        cls,
        mass_u: float,
        transition_frequency: float,
        excited_lifetime: float = math.inf,
        name: str = "",
        constants: PhysicalConstants = CODATA2018,
    ) -> "IonSpec":
        return cls(mass_u * constants.amu, transition_frequency, excited_lifetime, name)

    @property
    def omega0(self) -> float:
        return 2.0 * math.pi * self.transition_frequency


@dataclass(frozen=True)
class TrapSpec:
    """Harmonic trap given either by stiffness kappa (N/m) or ground-state frequency Omega/2pi (Hz)."""

    stiffness: float | None = None
    ground_frequency: float | None = None

    def __post_init__(self):
        if (self.stiffness is None) == (self.ground_frequency is None):
            raise DomainError("give exactly one of stiffness or ground_frequency")
        value = self.stiffness if self.stiffness is not None else self.ground_frequency
        if not value > 0:
            raise DomainError("trap parameter must be positive")

    @classmethod
    def from_mhz(cls, mhz: float) -> "TrapSpec":
        return cls(ground_frequency=mhz * 1e6)

    def omega(self, mass: float) -> float:
        """Ground-state angular trap frequency Omega (rad/s) for an ion of ``mass``."""
        if self.ground_frequency is not None:
            return 2.0 * math.pi * self.ground_frequency
        return math.sqrt(self.stiffness / mass)

    def kappa(self, mass: float) -> float:
        if self.stiffness is not None:
            return self.stiffness
        return mass * self.omega(mass) ** 2


def ion_epsilon(ion: IonSpec, constants: PhysicalConstants = CODATA2018) -> float:
    """hbar omega0 / (m c^2)."""
    return constants.hbar * ion.omega0 / (ion.mass * C_SI**2)


def _eps(ion: IonSpec, epsilon: float | None, constants: PhysicalConstants) -> float:
    eps = ion_epsilon(ion, constants) if epsilon is None else float(epsilon)
    if eps < 0:
        raise DomainError("epsilon must be non-negative")
    return eps


def excited_trap_frequency(
    trap: TrapSpec, ion: IonSpec, epsilon: float | None = None, constants: PhysicalConstants = CODATA2018
) -> float:
    """Omega* = sqrt(kappa / (m + hbar omega0/c^2)) = Omega / sqrt(1 + eps)."""
    eps = _eps(ion, epsilon, constants)
    return trap.omega(ion.mass) * math.exp(-0.5 * math.log1p(eps))


def excited_trap_frequency_first_order(
    trap: TrapSpec, ion: IonSpec, epsilon: float | None = None, constants: PhysicalConstants = CODATA2018
) -> float:
    """Omega (1 - eps / 2)."""
    eps = _eps(ion, epsilon, constants)
    return trap.omega(ion.mass) * (1.0 - 0.5 * eps)


def frequency_splitting(
    trap: TrapSpec, ion: IonSpec, epsilon: float | None = None, constants: PhysicalConstants = CODATA2018
) -> float:
    """Omega - Omega* = -Omega expm1(-log1p(eps) / 2), without cancellation."""
    eps = _eps(ion, epsilon, constants)
    if eps < MIN_EPSILON:
        raise DegenerateEpsilonError(
            f"eps = {eps:.3g} is below {MIN_EPSILON:g}: the frequency splitting is not measurable at 64-bit"
        )
    return -trap.omega(ion.mass) * math.expm1(-0.5 * math.log1p(eps))


def separation_time(
    trap: TrapSpec, ion: IonSpec, epsilon: float | None = None, constants: PhysicalConstants = CODATA2018
) -> float:
    """T = pi / (Omega - Omega*)."""
    return math.pi / frequency_splitting(trap, ion, epsilon, constants)


def separation_time_first_order(
    trap: TrapSpec, ion: IonSpec, epsilon: float | None = None, constants: PhysicalConstants = CODATA2018
) -> float:
    """T ~ (2 pi / Omega) / eps."""
    eps = _eps(ion, epsilon, constants)
    if eps < MIN_EPSILON:
        raise DegenerateEpsilonError(f"eps = {eps:.3g} is not measurable at 64-bit")
    return 2.0 * math.pi / trap.omega(ion.mass) / eps


def period_count(ion: IonSpec, epsilon: float | None = None, constants: PhysicalConstants = CODATA2018) -> float:
    """Motional periods before maximal separation, first order: m c^2 / (hbar omega0)."""
    eps = _eps(ion, epsilon, constants)
    if eps < MIN_EPSILON:
        raise DegenerateEpsilonError(f"eps = {eps:.3g} is not measurable at 64-bit")
    return 1.0 / eps


def phase_separation(
    trap: TrapSpec, ion: IonSpec, t: float, epsilon: float | None = None, constants: PhysicalConstants = CODATA2018
) -> float:
    """Accumulated motional phase difference (Omega - Omega*) t; equals pi at T."""
    if not t >= 0:
        raise DomainError("time must be non-negative")
    return frequency_splitting(trap, ion, epsilon, constants) * t


@dataclass(frozen=True)
class FeasibilityReport:
    """Trap-experiment figures of merit.

    ``separation_time`` and ``period_count`` are the first-order values;
    ``*_exact`` fields hold the unexpanded forms for comparison.
    """

    ion: str
    epsilon: float
    epsilon_source: str
    omega_ground: float
    omega_excited: float
    omega_excited_first_order: float
    delta_omega: float
    separation_time: float
    separation_time_exact: float
    period_count: float
    period_count_exact: float
    excited_lifetime: float
    lifetime_margin: float
    feasible: bool

    def __post_init__(self):
        if not self.omega_excited < self.omega_ground:
            raise ValueError("excited-state frequency must be below the ground-state frequency")
        if not self.separation_time > 0:
            raise ValueError("separation time must be positive")

    @property
    def separation_hours(self) -> float:
        return self.separation_time / 3600.0

    def to_dict(self) -> dict:
        """JSON-ready mapping; infinite lifetimes become null with a text note."""
        out = asdict(self)
        for key in ("excited_lifetime", "lifetime_margin"):
            if math.isinf(out[key]):
                out[key] = None
        out["separation_time_text"] = format_duration(self.separation_time)
        out["separation_time_exact_text"] = format_duration(self.separation_time_exact)
        out["excited_lifetime_text"] = (
            "effectively infinite" if math.isinf(self.excited_lifetime) else format_duration(self.excited_lifetime)
        )
        return out


def feasibility_report(
    trap: TrapSpec,
    ion: IonSpec,
    epsilon: float | None = None,
    constants: PhysicalConstants = CODATA2018,
) -> FeasibilityReport:
    """Assemble the figures of merit. Pass ``epsilon`` to override the constants-derived value."""
    eps = _eps(ion, epsilon, constants)
    omega = trap.omega(ion.mass)
    d_omega = frequency_splitting(trap, ion, eps, constants)
    t_first = separation_time_first_order(trap, ion, eps, constants)
    t_exact = math.pi / d_omega
    margin = ion.excited_lifetime / t_first
    return FeasibilityReport(
        ion=ion.name,
        epsilon=eps,
        epsilon_source="override" if epsilon is not None else "constants",
        omega_ground=omega,
        omega_excited=excited_trap_frequency(trap, ion, eps, constants),
        omega_excited_first_order=excited_trap_frequency_first_order(trap, ion, eps, constants),
        delta_omega=d_omega,
        separation_time=t_first,
        separation_time_exact=t_exact,
        period_count=period_count(ion, eps, constants),
        period_count_exact=t_exact * omega / (2.0 * math.pi),
        excited_lifetime=ion.excited_lifetime,
        lifetime_margin=margin,
        feasible=margin >= 1.0,
    )


def format_duration(seconds: float) -> str:
    if math.isinf(seconds):
        return "infinite"
    for unit, size in (("years", 365.25 * 86400), ("days", 86400.0), ("hours", 3600.0), ("minutes", 60.0)):
        if seconds >= size:
            return f"{seconds / size:.3g} {unit}"
    return f"{seconds:.3g} s"


def load_ion_catalog(path: str | Path | None = None, constants: PhysicalConstants = CODATA2018) -> dict[str, IonSpec]:
    """Read ``name, mass_u, transition_thz, lifetime_s_or_inf`` rows; the bundled file by default."""
    if path is None:
        text = resources.files("recoil_lab").joinpath("data/ions.csv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    catalog = {}
    reader = csv.DictReader(text.splitlines(), skipinitialspace=True)
    for row in reader:
        name = row["name"].strip()
        lifetime = row["lifetime_s_or_inf"].strip().lower()
        catalog[name] = IonSpec.from_amu(
            float(row["mass_u"]),
            float(row["transition_thz"]) * 1e12,
            math.inf if lifetime in ("inf", "infinity") else float(lifetime),
            name=name,
            constants=constants,
        )
    return catalog


def get_ion(name: str, catalog: dict[str, IonSpec] | None = None) -> IonSpec:
    catalog = load_ion_catalog() if catalog is None else catalog
    try:
        return catalog[name]
    except KeyError:
        raise DomainError(f"unknown ion {name!r}; available: {', '.join(sorted(catalog))}") from None
