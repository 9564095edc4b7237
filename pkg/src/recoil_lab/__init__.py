"""Recoil friction on moving spontaneous emitters, with mass-defect dynamics and ion-trap estimates."""

__version__ = "0.1.0"

from .constants import CODATA2018, C_SI, PhysicalConstants
from .errors import (
    BranchMismatchError,
    ConvergenceError,
    DegenerateEpsilonError,
    DomainError,
    NormalizationError,
    NumericalGuardError,
    ParityViolationError,
    RecoilLabError,
)
from .kinematics import *  # noqa: F401,F403
from .patterns import *  # noqa: F401,F403
from .quadrature import QuadratureSpec, sphere_grid
from .force import *  # noqa: F401,F403
from .dynamics import *  # noqa: F401,F403
from .iontrap import *  # noqa: F401,F403
from . import dynamics, force, iontrap, kinematics, patterns

__all__ = (
    ["__version__", "CODATA2018", "C_SI", "PhysicalConstants", "sphere_grid"]
    + [
        "RecoilLabError",
        "DomainError",
        "NormalizationError",
        "BranchMismatchError",
        "NumericalGuardError",
        "ConvergenceError",
        "ParityViolationError",
        "DegenerateEpsilonError",
    ]
    + kinematics.__all__
    + patterns.__all__
    + force.__all__
    + dynamics.__all__
    + iontrap.__all__
)
