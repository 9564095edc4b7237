"""Emission rate densities.

An :class:`EmissionPattern` stores a sharp transition frequency ``omega0``,
a total decay rate ``gamma_total`` and a normalized angular density ``g``.
The rate per unit wavevector volume is then

    gamma(k) = gamma_total * delta(omega - omega0) * g(n) / omega0**2,

so the direction-resolved factor gamma_tilde(n) = gamma_total * g(n) /
omega0**2 integrates to gamma_total / omega0**2 over the sphere. The
delta function is never represented numerically; every frequency integral
is collapsed onto ``omega0``.
"""

from __future__ import annotations

import csv
import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .constants import CODATA2018, PhysicalConstants
from .errors import DomainError, NormalizationError
from .kinematics import Direction, orthonormal_frame
from .quadrature import QuadratureSpec, gauss_legendre, sphere_grid

__all__ = [
    "DipoleMoment",
    "SphereRule",
    "AngularDensity",
    "IsotropicDensity",
    "DipoleDensity",
    "TabulatedDensity",
    "EmissionPattern",
    "dipole_decay_rate",
    "per_solid_angle_rate",
    "total_rate_check",
    "sample_direction",
    "sample_directions",
    "survival_probability",
    "dipole_inverse_cdf",
    "load_tabulated_csv",
    "write_tabulated_csv",
]

NORMALIZATION_TOL = 1e-10
RESCALE_LIMIT = 1e-3
TABULATED_SUBRULE = 4
CSV_HEADER = ("cos_theta_lo", "cos_theta_hi", "phi_lo", "phi_hi", "weight")


@dataclass(frozen=True)
class DipoleMoment:
    magnitude: float  # C m

    def __post_init__(self):
        if not self.magnitude >= 0:
            raise DomainError("dipole moment magnitude must be non-negative")


def dipole_decay_rate(omega0: float, d: DipoleMoment | float, constants: PhysicalConstants = CODATA2018) -> float:
    """Electric-dipole spontaneous emission rate omega0^3 |d|^2 / (3 pi eps0 hbar c^3)."""
    if not omega0 > 0:
        raise DomainError("omega0 must be positive")
    mag = d.magnitude if isinstance(d, DipoleMoment) else DipoleMoment(float(d)).magnitude
    k = constants
    return omega0**3 * mag**2 / (3.0 * math.pi * k.eps0 * k.hbar * k.c**3)


def survival_probability(gamma_total: float, t):
    """Excited-state population exp(-gamma t) for an emitter prepared excited at t=0."""
    if np.any(np.asarray(t) < 0):
        raise DomainError("time must be non-negative")
    return np.exp(-gamma_total * np.asarray(t, dtype=float)) if np.ndim(t) else math.exp(-gamma_total * t)


class SphereRule(NamedTuple):
    """Quadrature rule with the density folded into the weights.

    ``sum(weights * f(dirs))`` approximates the integral of g f over the
    sphere. When ``paired`` is set the second half of the rows are the
    exact negatives of the first half, with equal weights.
    """

    dirs: np.ndarray
    weights: np.ndarray
    paired: bool

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Apply the rule to per-node values of shape (M,) or (M, d)."""
        wv = values * (self.weights if values.ndim == 1 else self.weights[:, None])
        if self.paired:
            m = wv.shape[0] // 2
            wv = wv[:m] + wv[m:]
        # contiguous last axis so numpy uses pairwise summation
        return np.ascontiguousarray(np.moveaxis(wv, 0, -1)).sum(axis=-1)


class AngularDensity(ABC):
    """Normalized angular distribution g(n), in 1/sr."""

    kind: str = ""

    @abstractmethod
    def density(self, dirs: np.ndarray) -> np.ndarray:
        """g at each row of ``dirs`` (shape (M, 3))."""

    @abstractmethod
    def rule(self, q: QuadratureSpec | None = None) -> SphereRule:
        """Quadrature rule adapted to this density."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` unit vectors drawn from g, shape (size, 3)."""

    @property
    @abstractmethod
    def parity_symmetric(self) -> bool:
        """Whether g(-n) == g(n)."""

    def __call__(self, n: Direction) -> float:
        return float(self.density(n.as_array()[None, :])[0])

    def normalization(self, q: QuadratureSpec | None = None) -> float:
        r = self.rule(q)
        return float(r.integrate(np.ones(len(r.weights))))

    def _verify_normalization(self):
        total = self.normalization()
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NormalizationError(f"{self.kind} density integrates to {total!r}, not 1")


class IsotropicDensity(AngularDensity):
    kind = "isotropic"

    def __init__(self):
        self._verify_normalization()

    def density(self, dirs):
        dirs = np.asarray(dirs, dtype=float)
        return np.full(dirs.shape[:-1], 1.0 / (4.0 * math.pi))

    def rule(self, q=None):
        dirs, _, w = sphere_grid(q or QuadratureSpec())
        return SphereRule(dirs, w / (4.0 * math.pi), True)

    def sample(self, rng, size):
        cos_t = rng.uniform(-1.0, 1.0, size)
        phi = rng.uniform(0.0, 2.0 * math.pi, size)
        sin_t = np.sqrt(np.clip(1.0 - cos_t * cos_t, 0.0, None))
        return np.column_stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t])

    @property
    def parity_symmetric(self):
        return True

    def __repr__(self):
        return "IsotropicDensity()"


def dipole_inverse_cdf(u, tol: float = 1e-14, max_iter: int = 100) -> np.ndarray:
    """Solve (3/4)(x - x^3/3) + 1/2 = u for x in [-1, 1].

    Newton's method from x = 2u - 1, safeguarded by bisection on the
    bracket [-1, 1] where the derivative vanishes at the end points.
    """
    u = np.asarray(u, dtype=float)
    x = 2.0 * u - 1.0
    lo = np.full_like(x, -1.0)
    hi = np.full_like(x, 1.0)
    active = np.arange(x.size)
    xf, lof, hif, uf = x.reshape(-1), lo.reshape(-1), hi.reshape(-1), u.reshape(-1)
    for _ in range(max_iter):
        xa, ua = xf[active], uf[active]
        f = 0.75 * (xa - xa**3 / 3.0) + 0.5 - ua
        la = np.where(f < 0, xa, lof[active])
        ha = np.where(f > 0, xa, hif[active])
        fp = 0.75 * (1.0 - xa * xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_new = xa - np.where(fp > 0, f / fp, np.inf)
        x_new = np.where((x_new > la) & (x_new < ha), x_new, 0.5 * (la + ha))
        # near x = +-1 the root is double and x is only defined to ~sqrt(eps)
        solved = np.abs(f) <= 1e-16
        x_new = np.where(solved, xa, x_new)
        done = solved | (np.abs(x_new - xa) < tol)
        xf[active], lof[active], hif[active] = x_new, la, ha
        active = active[~done]
        if active.size == 0:
            break
    return np.clip(xf.reshape(x.shape), -1.0, 1.0)


class DipoleDensity(AngularDensity):
    """(3 / 8 pi) sin^2(psi), psi measured from the dipole axis."""

    kind = "dipole"

    def __init__(self, axis: Direction | tuple | np.ndarray = (0.0, 0.0, 1.0)):
        self.axis = axis if isinstance(axis, Direction) else Direction.from_array(axis)
        self._frame = orthonormal_frame(self.axis.as_array())
        self._verify_normalization()

    def density(self, dirs):
        dirs = np.asarray(dirs, dtype=float)
        c = dirs @ self.axis.as_array()
        return (3.0 / (8.0 * math.pi)) * (1.0 - c * c)

    def rule(self, q=None):
        dirs, cos_ax, w = sphere_grid(q or QuadratureSpec(), self.axis.as_array())
        g = (3.0 / (8.0 * math.pi)) * (1.0 - cos_ax * cos_ax)
        return SphereRule(dirs, w * g, True)

    def sample(self, rng, size):
        x = dipole_inverse_cdf(rng.uniform(0.0, 1.0, size))
        phi = rng.uniform(0.0, 2.0 * math.pi, size)
        s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
        e1, e2, a = self._frame
        return x[:, None] * a + s[:, None] * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)

    @property
    def parity_symmetric(self):
        return True

    def __repr__(self):
        return f"DipoleDensity(axis={tuple(self.axis.as_array())})"


def _alias_table(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias tables for the discrete distribution ``p``."""
    n = len(p)
    scaled = p * n / p.sum()
    prob = np.zeros(n)
    alias = np.zeros(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, l_ = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = l_
        scaled[l_] = scaled[l_] + scaled[s] - 1.0
        (small if scaled[l_] < 1.0 else large).append(l_)
    for i in large + small:
        prob[i] = 1.0
        alias[i] = i
    return prob, alias


class TabulatedDensity(AngularDensity):
    """Piecewise-constant density on a (cos theta, phi) grid about the z axis.

    ``values[i, j]`` is the density (1/sr) on the cell between
    ``cos_edges[i:i+2]`` and ``phi_edges[j:j+2]``. A table that integrates
    to within 1e-3 of one is rescaled with a warning; anything worse is
    rejected.
    """

    kind = "tabulated"

    def __init__(self, cos_edges, phi_edges, values, *, rescale: bool = False):
        ce = np.array(cos_edges, dtype=float)
        pe = np.array(phi_edges, dtype=float)
        vals = np.array(values, dtype=float)
        if ce.ndim != 1 or len(ce) < 2 or np.any(np.diff(ce) <= 0):
            raise DomainError("cos_edges must be strictly increasing")
        if not (math.isclose(ce[0], -1.0, abs_tol=1e-12) and math.isclose(ce[-1], 1.0, abs_tol=1e-12)):
            raise DomainError("cos_edges must span [-1, 1]")
        if pe.ndim != 1 or len(pe) < 2 or np.any(np.diff(pe) <= 0):
            raise DomainError("phi_edges must be strictly increasing")
        if not (math.isclose(pe[0], 0.0, abs_tol=1e-12) and math.isclose(pe[-1], 2 * math.pi, abs_tol=1e-12)):
            raise DomainError("phi_edges must span [0, 2 pi]")
        if vals.shape != (len(ce) - 1, len(pe) - 1):
            raise DomainError(f"values must have shape {(len(ce) - 1, len(pe) - 1)}, got {vals.shape}")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise DomainError("tabulated density must be finite and non-negative")
        ce[0], ce[-1], pe[0], pe[-1] = -1.0, 1.0, 0.0, 2 * math.pi
        cell_area = np.diff(ce)[:, None] * np.diff(pe)[None, :]
        total = float(np.sum(vals * cell_area))
        if total <= 0:
            raise NormalizationError("tabulated density is identically zero")
        err = abs(total - 1.0)
        if err > NORMALIZATION_TOL and not rescale:
            if err >= RESCALE_LIMIT:
                raise NormalizationError(f"tabulated density integrates to {total!r}, not 1")
            warnings.warn(f"tabulated density integrates to {total!r}; rescaling", stacklevel=2)
        vals = vals / total
        self.cos_edges, self.phi_edges, self.values = ce, pe, vals
        for arr in (ce, pe, vals):
            arr.setflags(write=False)
        self._cell_prob = (vals * cell_area).reshape(-1)
        self._alias = _alias_table(self._cell_prob)
        self._verify_normalization()

    @classmethod
    def from_function(cls, g, n_cos: int, n_phi: int, sub: int = TABULATED_SUBRULE) -> "TabulatedDensity":
        """Tabulate the cell averages of ``g`` (a function of (M, 3) directions)."""
        ce = np.linspace(-1.0, 1.0, n_cos + 1)
        pe = np.linspace(0.0, 2 * math.pi, n_phi + 1)
        dirs, w, shape = _cell_nodes(ce, pe, sub)
        g_vals = np.asarray(g(dirs), dtype=float).reshape(shape)
        w = w.reshape(shape)
        area = np.diff(ce)[:, None] * np.diff(pe)[None, :]
        avg = (g_vals * w).sum(axis=-1) / area
        return cls(ce, pe, avg, rescale=True)

    def _locate(self, dirs):
        dirs = np.asarray(dirs, dtype=float)
        cos_t = np.clip(dirs[..., 2], -1.0, 1.0)
        phi = np.mod(np.arctan2(dirs[..., 1], dirs[..., 0]), 2 * math.pi)
        i = np.clip(np.searchsorted(self.cos_edges, cos_t, side="right") - 1, 0, len(self.cos_edges) - 2)
        j = np.clip(np.searchsorted(self.phi_edges, phi, side="right") - 1, 0, len(self.phi_edges) - 2)
        return i, j

    def density(self, dirs):
        i, j = self._locate(dirs)
        return self.values[i, j]

    def rule(self, q=None):
        # q is not used: each cell gets its own Gauss-Legendre sub-rule
        dirs, w, shape = _cell_nodes(self.cos_edges, self.phi_edges, TABULATED_SUBRULE)
        gw = (w.reshape(shape) * self.values[..., None]).reshape(-1)
        return SphereRule(dirs, gw, False)

    def sample(self, rng, size):
        prob, alias = self._alias
        cell = rng.integers(0, len(prob), size)
        keep = rng.uniform(0.0, 1.0, size) < prob[cell]
        cell = np.where(keep, cell, alias[cell])
        n_phi = len(self.phi_edges) - 1
        i, j = np.divmod(cell, n_phi)
        cos_t = rng.uniform(self.cos_edges[i], self.cos_edges[i + 1])
        phi = rng.uniform(self.phi_edges[j], self.phi_edges[j + 1])
        s = np.sqrt(np.clip(1.0 - cos_t * cos_t, 0.0, None))
        return np.column_stack([s * np.cos(phi), s * np.sin(phi), cos_t])

    @property
    def parity_symmetric(self):
        ce, pe = self.cos_edges, self.phi_edges
        if not np.allclose(ce, -ce[::-1], rtol=0, atol=1e-12):
            return False
        shifted = np.mod(pe + math.pi, 2 * math.pi)
        shifted[np.isclose(shifted, 0.0, atol=1e-12) & (pe > 0)] = 2 * math.pi
        if not np.all(np.min(np.abs(shifted[:, None] - pe[None, :]), axis=1) < 1e-12):
            return False
        cc = 0.5 * (ce[:-1] + ce[1:])
        pc = 0.5 * (pe[:-1] + pe[1:])
        C, P = np.meshgrid(cc, pc, indexing="ij")
        S = np.sqrt(1.0 - C * C)
        centers = np.stack([S * np.cos(P), S * np.sin(P), C], axis=-1).reshape(-1, 3)
        return bool(np.allclose(self.density(centers), self.density(-centers), rtol=1e-12, atol=0))

    def __repr__(self):
        return f"TabulatedDensity({len(self.cos_edges) - 1}x{len(self.phi_edges) - 1} cells)"


def _cell_nodes(cos_edges, phi_edges, sub):
    """Gauss-Legendre sub-rule nodes in every cell; weights are solid angles."""
    xg, wg = gauss_legendre(sub, 0.0, 1.0)
    dc = np.diff(cos_edges)
    dp = np.diff(phi_edges)
    x = cos_edges[:-1, None] + dc[:, None] * xg[None, :]  # (nc, sub)
    p = phi_edges[:-1, None] + dp[:, None] * xg[None, :]  # (np, sub)
    wx = dc[:, None] * wg[None, :]
    wp = dp[:, None] * wg[None, :]
    nc, npp = len(dc), len(dp)
    X = np.broadcast_to(x[:, None, :, None], (nc, npp, sub, sub))
    P = np.broadcast_to(p[None, :, None, :], (nc, npp, sub, sub))
    W = wx[:, None, :, None] * wp[None, :, None, :]
    S = np.sqrt(np.clip(1.0 - X * X, 0.0, None))
    dirs = np.stack([S * np.cos(P), S * np.sin(P), X], axis=-1).reshape(-1, 3)
    return dirs, W.reshape(-1), (nc, npp, sub * sub)


@dataclass(frozen=True)
class EmissionPattern:
    """Sharp-line emitter: transition frequency (rad/s), total rate (1/s), angular density."""

    omega0: float
    gamma_total: float
    angular: AngularDensity

    def __post_init__(self):
        if not self.omega0 > 0:
            raise DomainError("omega0 must be positive")
        if not self.gamma_total > 0:
            raise DomainError("gamma_total must be positive")

    @classmethod
    def isotropic(cls, omega0: float, gamma_total: float) -> "EmissionPattern":
        return cls(omega0, gamma_total, IsotropicDensity())

    @classmethod
    def dipole(cls, omega0: float, gamma_total: float, axis=(0.0, 0.0, 1.0)) -> "EmissionPattern":
        return cls(omega0, gamma_total, DipoleDensity(axis))

    def gamma_tilde(self, dirs: np.ndarray) -> np.ndarray:
        """Angular rate factor gamma_total g / omega0^2 (units s rad^-2 sr^-1)."""
        return self.gamma_total * self.angular.density(dirs) / self.omega0**2


def per_solid_angle_rate(p: EmissionPattern, n: Direction) -> float:
    """Emission rate into unit solid angle around ``n``, in 1/(s sr)."""
    return p.gamma_total * p.angular(n)


def total_rate_check(p: EmissionPattern, q: QuadratureSpec | None = None) -> float:
    """Integrate gamma_total g over the sphere; must give back gamma_total."""
    total = p.gamma_total * p.angular.normalization(q)
    if abs(total - p.gamma_total) > NORMALIZATION_TOL * p.gamma_total:
        raise NormalizationError(f"integrated rate {total!r} != gamma_total {p.gamma_total!r}")
    return total


def _as_rng(rng_state) -> np.random.Generator:
    if isinstance(rng_state, np.random.Generator):
        return rng_state
    return np.random.default_rng(rng_state)


def sample_directions(p: EmissionPattern | AngularDensity, rng_state, size: int) -> np.ndarray:
    angular = p.angular if isinstance(p, EmissionPattern) else p
    return angular.sample(_as_rng(rng_state), int(size))


def sample_direction(p: EmissionPattern | AngularDensity, rng_state) -> Direction:
    return Direction.from_array(sample_directions(p, rng_state, 1)[0])


def load_tabulated_csv(path: str | Path) -> TabulatedDensity:
    """Read a density table; weights are relative densities and get rescaled."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, skipinitialspace=True)
        missing = set(CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise DomainError(f"density table is missing columns {sorted(missing)}")
        rows = [tuple(float(r[k]) for k in CSV_HEADER) for r in reader]
    if not rows:
        raise DomainError("density table is empty")
    arr = np.array(rows)
    ce = np.unique(np.concatenate([arr[:, 0], arr[:, 1]]))
    pe = np.unique(np.concatenate([arr[:, 2], arr[:, 3]]))
    values = np.full((len(ce) - 1, len(pe) - 1), np.nan)
    for c_lo, c_hi, p_lo, p_hi, weight in rows:
        i = int(np.searchsorted(ce, c_lo))
        j = int(np.searchsorted(pe, p_lo))
        if ce[i + 1] != c_hi or pe[j + 1] != p_hi:
            raise DomainError(f"cell ({c_lo}, {c_hi}, {p_lo}, {p_hi}) does not match a single grid cell")
        values[i, j] = weight
    if np.any(np.isnan(values)):
        raise DomainError("density table does not cover every grid cell")
    return TabulatedDensity(ce, pe, values, rescale=True)


def write_tabulated_csv(density: TabulatedDensity, path: str | Path) -> None:
    ce, pe = density.cos_edges, density.phi_edges
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for i in range(len(ce) - 1):
            for j in range(len(pe) - 1):
                w.writerow([repr(float(x)) for x in (ce[i], ce[i + 1], pe[j], pe[j + 1], density.values[i, j])])
