"""Product quadrature on the unit sphere.

Gauss-Legendre in cos(theta) times the periodic trapezoid rule in phi. The
grid is built as a half set plus its exact negation, so parity-symmetric
integrands cancel pairwise without round-off asymmetry.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .kinematics import orthonormal_frame

DEFAULT_N_COS = 64
DEFAULT_N_PHI = 16


@dataclass(frozen=True)
class QuadratureSpec:
    n_cos: int = DEFAULT_N_COS
    n_phi: int = DEFAULT_N_PHI

    def __post_init__(self):
        if int(self.n_cos) < 2:
            raise DomainError(f"n_cos must be >= 2, got {self.n_cos}")
        if int(self.n_phi) < 4 or int(self.n_phi) % 2:
            raise DomainError(f"n_phi must be an even number >= 4, got {self.n_phi}")


@lru_cache(maxsize=64)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    # symmetrize: leggauss is symmetric only to round-off
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, lo: float = -1.0, hi: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [lo, hi]."""
    x, w = _gauss_legendre(int(n))
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def sphere_grid(q: QuadratureSpec, axis=(0.0, 0.0, 1.0)):
    """Directions (M, 3), polar cosines about ``axis`` (M,), weights (M,) summing to 4 pi.

    The first M/2 rows are the nodes with phi in [0, pi); the last M/2 are
    their exact negatives.
    """
    x, wx = _gauss_legendre(q.n_cos)
    phi = 2.0 * np.pi * np.arange(q.n_phi // 2) / q.n_phi
    dphi = 2.0 * np.pi / q.n_phi
    e1, e2, a = orthonormal_frame(axis)
    xx, pp = np.meshgrid(x, phi, indexing="ij")
    ss = np.sqrt(np.clip(1.0 - xx * xx, 0.0, None))
    half = (
        xx[..., None] * a
        + ss[..., None] * (np.cos(pp)[..., None] * e1 + np.sin(pp)[..., None] * e2)
    ).reshape(-1, 3)
    w_half = np.broadcast_to(wx[:, None] * dphi, xx.shape).reshape(-1)
    cos_half = xx.reshape(-1)
    dirs = np.concatenate([half, -half])
    cos_ax = np.concatenate([cos_half, -cos_half])
    weights = np.concatenate([w_half, w_half])
    return dirs, cos_ax, weights


def pair_sum(values: np.ndarray) -> np.ndarray:
    """Sum over a sphere_grid-ordered array, combining each node with its mirror first."""
    m = values.shape[0] // 2
    return np.sum(values[:m] + values[m:], axis=0)
