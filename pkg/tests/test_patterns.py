import math
import warnings

import numpy as np
import pytest
from scipy import stats

from recoil_lab import (
    DipoleDensity,
    DipoleMoment,
    Direction,
    DomainError,
    EmissionPattern,
    IsotropicDensity,
    NormalizationError,
    TabulatedDensity,
    dipole_decay_rate,
    dipole_inverse_cdf,
    load_tabulated_csv,
    per_solid_angle_rate,
    sample_direction,
    sample_directions,
    survival_probability,
    total_rate_check,
    write_tabulated_csv,
)
from recoil_lab.acceptance import smooth_symmetric_table


def test_dipole_decay_rate_value():
    assert dipole_decay_rate(2.455e15, DipoleMoment(2.081e-29)) == pytest.approx(27023433.178074818, rel=1e-12)


def test_dipole_decay_rate_scaling():
    base = dipole_decay_rate(1e15, 1e-29)
    assert dipole_decay_rate(2e15, 1e-29) == pytest.approx(8 * base, rel=1e-14)
    assert dipole_decay_rate(1e15, 2e-29) == pytest.approx(4 * base, rel=1e-14)
    assert dipole_decay_rate(1e15, 0.0) == 0.0


def test_survival_probability():
    assert survival_probability(3.2e7, 1e-7) == pytest.approx(0.04076220397836621, rel=1e-15)
    assert survival_probability(3.2e7, 0.0) == 1.0
    with pytest.raises(DomainError):
        survival_probability(1.0, -1.0)


@pytest.mark.parametrize(
    "density",
    [IsotropicDensity(), DipoleDensity((0, 0, 1)), DipoleDensity((1, -1, 0.5)), smooth_symmetric_table()],
    ids=["isotropic", "dipole-z", "dipole-tilted", "tabulated"],
)
def test_normalized_and_parity_symmetric(density):
    assert density.normalization() == pytest.approx(1.0, abs=1e-12)
    assert density.parity_symmetric


def test_dipole_density_values():
    g = DipoleDensity((0, 0, 1))
    assert g(Direction.from_array([1, 0, 0])) == pytest.approx(3 / (8 * math.pi))
    assert g(Direction.from_array([0, 0, 1])) == pytest.approx(0.0, abs=1e-17)


def test_per_solid_angle_and_total_rate():
    p = EmissionPattern.isotropic(1e15, 2e7)
    assert per_solid_angle_rate(p, Direction.from_angles(1.0)) == pytest.approx(2e7 / (4 * math.pi))
    assert total_rate_check(p) == pytest.approx(2e7, rel=1e-12)
    assert total_rate_check(EmissionPattern.dipole(1e15, 2e7, (0, 1, 1))) == pytest.approx(2e7, rel=1e-12)


def test_dipole_inverse_cdf_endpoints_and_residual():
    u = np.array([0.0, 1.0, 0.5, 0.25, 1e-300, 1 - 1e-16])
    x = dipole_inverse_cdf(u)
    assert x[0] == -1.0 and x[1] == 1.0 and x[2] == 0.0
    cdf = 0.5 + 0.75 * x - 0.25 * x**3
    np.testing.assert_allclose(cdf, u, atol=1e-15)


def _chi2_pvalue(dirs, n_cos=16, n_phi=32, density=None):
    cos_t = dirs[:, 2]
    phi = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2 * math.pi)
    ce = np.linspace(-1, 1, n_cos + 1)
    pe = np.linspace(0, 2 * math.pi, n_phi + 1)
    counts, _, _ = np.histogram2d(cos_t, phi, bins=[ce, pe])
    if density == "dipole":
        # integral of (3/(8 pi))(1 - c^2) over each cell
        F = lambda c: c - c**3 / 3  # noqa: E731
        row = 3 / (8 * math.pi) * (F(ce[1:]) - F(ce[:-1])) * (2 * math.pi / n_phi)
    else:
        row = np.full(n_cos, (2 / n_cos) * (2 * math.pi / n_phi) / (4 * math.pi))
    expected = np.repeat(row[:, None], n_phi, axis=1) * len(dirs)
    return stats.chisquare(counts.ravel(), expected.ravel()).pvalue


@pytest.mark.parametrize("kind", ["isotropic", "dipole"])
def test_sampling_matches_density(kind):
    density = IsotropicDensity() if kind == "isotropic" else DipoleDensity((0, 0, 1))
    dirs = sample_directions(density, 12345, 400_000)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, rtol=1e-14)
    assert _chi2_pvalue(dirs, density=kind) > 1e-3


def test_tabulated_sampling_matches_cells():
    rng = np.random.default_rng(0)
    vals = rng.uniform(0.5, 2.0, size=(4, 8))
    t = TabulatedDensity(np.linspace(-1, 1, 5), np.linspace(0, 2 * math.pi, 9), vals, rescale=True)
    dirs = t.sample(np.random.default_rng(1), 200_000)
    phi = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2 * math.pi)
    counts, _, _ = np.histogram2d(dirs[:, 2], phi, bins=[t.cos_edges, t.phi_edges])
    area = np.diff(t.cos_edges)[:, None] * np.diff(t.phi_edges)[None, :]
    expected = (t.values * area * len(dirs)).ravel()
    assert stats.chisquare(counts.ravel(), expected).pvalue > 1e-3


def test_sampling_is_deterministic():
    p = EmissionPattern.dipole(1e15, 1e7, (0.2, 0.3, 1.0))
    a = sample_directions(p, 7, 1000)
    b = sample_directions(p, np.random.default_rng(7), 1000)
    assert np.array_equal(a, b)
    assert isinstance(sample_direction(p, 7), Direction)


def test_tabulated_normalization_policy():
    ce, pe = np.linspace(-1, 1, 3), np.linspace(0, 2 * math.pi, 5)
    exact = np.full((2, 4), 1 / (4 * math.pi))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        TabulatedDensity(ce, pe, exact)
    assert not caught
    with pytest.warns(UserWarning, match="rescaling"):
        t = TabulatedDensity(ce, pe, exact * (1 + 1e-5))
    assert t.normalization() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(NormalizationError):
        TabulatedDensity(ce, pe, exact * 1.1)
    assert TabulatedDensity(ce, pe, exact * 1.1, rescale=True).normalization() == pytest.approx(1.0)


def test_tabulated_validation():
    pe = np.linspace(0, 2 * math.pi, 3)
    with pytest.raises(DomainError):
        TabulatedDensity([-1, 0.5], pe, [[1, 1]])
    with pytest.raises(DomainError):
        TabulatedDensity([-1, 1], pe, [[1, -1]], rescale=True)
    with pytest.raises(DomainError):
        TabulatedDensity([-1, 1], pe, [[1, 1, 1]])


def test_asymmetric_table_is_flagged():
    ce, pe = np.linspace(-1, 1, 3), np.linspace(0, 2 * math.pi, 5)
    vals = np.ones((2, 4))
    vals[1] = 3.0  # brighter in the forward hemisphere
    assert not TabulatedDensity(ce, pe, vals, rescale=True).parity_symmetric


def test_csv_round_trip(tmp_path):
    t = smooth_symmetric_table(8, 16)
    path = tmp_path / "table.csv"
    write_tabulated_csv(t, path)
    back = load_tabulated_csv(path)
    np.testing.assert_allclose(back.values, t.values, rtol=1e-14)
    assert np.array_equal(back.cos_edges, t.cos_edges)


def test_csv_missing_cell(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("cos_theta_lo,cos_theta_hi,phi_lo,phi_hi,weight\n-1,0,0,6.283185307179586,1\n")
    with pytest.raises(DomainError):
        load_tabulated_csv(path)


def test_constructor_leaves_inputs_alone():
    ce, pe = np.linspace(-1, 1, 3), np.linspace(0, 2 * math.pi, 5)
    vals = np.ones((2, 4))
    TabulatedDensity(ce, pe, vals, rescale=True)
    assert ce.flags.writeable and pe.flags.writeable and vals.flags.writeable
    TabulatedDensity(ce, pe, vals, rescale=True)
