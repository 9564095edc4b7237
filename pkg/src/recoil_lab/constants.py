"""CODATA 2018 values of the constants used throughout the package."""

from __future__ import annotations

from dataclasses import dataclass, field

C_SI = 299792458.0  # m/s, exact by definition of the metre


@dataclass(frozen=True)
class PhysicalConstants:
    """SI constants. ``c`` is fixed; the others can only be changed in tests."""

    hbar: float = field(default=1.054571817e-34, init=False)  # J s
    eps0: float = field(default=8.8541878128e-12, init=False)  # F/m
    amu: float = field(default=1.66053906660e-27, init=False)  # kg

    @property
    def c(self) -> float:
        return C_SI

    @classmethod
    def for_testing(cls, **overrides: float) -> "PhysicalConstants":
        """Build a non-standard constant set (unit tests only).

        The speed of light is not accepted as an override.
        """
        if "c" in overrides:
            raise TypeError("the speed of light is not configurable")
        consts = cls()
        for name, value in overrides.items():
            if name not in ("hbar", "eps0", "amu"):
                raise TypeError(f"unknown constant {name!r}")
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
            object.__setattr__(consts, name, float(value))
        return consts


CODATA2018 = PhysicalConstants()

c = CODATA2018.c
hbar = CODATA2018.hbar
eps0 = CODATA2018.eps0
amu = CODATA2018.amu
