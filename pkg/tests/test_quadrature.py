import numpy as np
import pytest
import scipy.integrate

from stablab.errors import QuadratureUnstable
from stablab.geometry import SpectralProfile
from stablab.models import TWO_PI, diagonal_model
from stablab.quadrature import (circle_mesh, closed_form_circle_abs2, radial_grid,
                                radial_sweep)
from stablab.stability import integral_criterion

PROFILE = SpectralProfile(phis=(0.0,), alpha=2.0, eps_a=np.pi / 8, m_a=10.0)


def test_radial_grid_default():
    r = radial_grid()
    assert len(r) == 61
    assert r[0] == pytest.approx(1.0 + 1e-6, rel=1e-15)
    assert r[-1] == pytest.approx(2.0, rel=1e-15)
    assert np.all(np.diff(r) > 0)


def test_circle_mesh_weights_sum_to_two_pi():
    counts = []
    for r in (1.0 + 1e-6, 1.2, 1.9, 3.0):
        nodes, weights = circle_mesh(PROFILE, r)
        assert float(np.sum(weights)) == pytest.approx(TWO_PI, rel=1e-12)
        assert np.all((nodes >= 0.0) & (nodes < TWO_PI))
        assert np.all(weights > 0)
        counts.append(len(nodes))
    # dyadic refinement toward the point deepens as r - 1 shrinks
    assert counts[0] > counts[2]


def test_circle_mesh_rejects_disk():
    for r in (1.0, 0.9):
        with pytest.raises(ValueError):
            circle_mesh(PROFILE, r)


def test_closed_form_matches_adaptive_quad():
    for a in (0.5 + 0j, 0.3 * np.exp(0.7j)):
        for r in (1.01, 1.5):
            val, err = scipy.integrate.quad(
                lambda t: 1.0 / abs(r * np.exp(1j * t) - a) ** 2, 0.0, TWO_PI,
                limit=200)
            assert err < 1e-7
            want = (r - 1.0) * val
            got = closed_form_circle_abs2(1.0, a, np.array([r]))[0]
            assert got == pytest.approx(want, rel=1e-8)


def test_sweep_one_entry_matches_closed_form():
    a = 0.5

    def integrand(lams):
        return 1.0 / np.abs(lams - a) ** 2

    qr = radial_sweep(PROFILE, integrand)
    want = closed_form_circle_abs2(1.0, a, qr.r_grid)
    assert np.allclose(qr.weighted, want, rtol=1e-6, atol=0.0)
    assert qr.sup_weighted == pytest.approx(float(np.max(want)), rel=1e-6)
    assert qr.refinement_delta < 1e-6


def test_sweep_poisson_formula_diagonal():
    rng = np.random.default_rng(13)
    a = 0.8 * rng.uniform(0.2, 1.0, 12) * np.exp(1j * rng.uniform(0, TWO_PI, 12))
    x = rng.standard_normal(12) + 1j * rng.standard_normal(12)

    def integrand(lams):
        return np.sum(np.abs(x[None, :]) ** 2 / np.abs(lams[:, None] - a[None, :]) ** 2,
                      axis=1)

    qr = radial_sweep(PROFILE, integrand)
    for i, r in enumerate(qr.r_grid):
        want = float(np.sum(np.abs(x) ** 2 * TWO_PI / (r**2 - np.abs(a) ** 2)))
        assert qr.values[i] == pytest.approx(want, rel=1e-8)


def test_sweep_unresolved_peak_raises():
    # pole just outside the circle at an angle the mesh never refines
    pole = 1.0001 * np.exp(1.0j)

    def integrand(lams):
        return 1.0 / np.abs(lams - pole) ** 2

    with pytest.raises(QuadratureUnstable):
        radial_sweep(PROFILE, integrand, r_grid=np.array([1.0002]))
    qr = radial_sweep(PROFILE, integrand, r_grid=np.array([1.0002]), check=False)
    assert qr.refinement_delta > 0.05


def test_integral_criterion_one_entry_closed_form():
    model = diagonal_model(1, prefix=(0.5 + 0j,))
    probes = np.array([[1.0 + 0j]])
    qr = integral_criterion(model, PROFILE, probes=probes)
    # direct plus adjoint side double the closed form on a diagonal model
    want = 2.0 * closed_form_circle_abs2(1.0, 0.5, qr.r_grid)
    assert np.allclose((qr.r_grid - 1.0) * qr.values, want, rtol=1e-6, atol=0.0)
    assert qr.details["pairs"] == 1
    assert qr.details["per_pair_sup"][0] == pytest.approx(qr.sup_weighted, rel=1e-15)
    assert qr.sup_weighted == pytest.approx(float(np.max(want)), rel=1e-6)


def test_integral_criterion_per_pair_bookkeeping():
    entries = np.array([0.1, 0.4j, -0.7, 0.85, 0.3 - 0.3j])
    model = diagonal_model(5, prefix=entries)
    probes = np.eye(5, dtype=complex)
    qr = integral_criterion(model, PROFILE, probes=probes, base_panels=12)
    for i, a in enumerate(entries):
        want = 2.0 * closed_form_circle_abs2(1.0, a, qr.r_grid)
        assert qr.details["per_pair_sup"][i] == pytest.approx(float(np.max(want)),
                                                              rel=1e-6)
    assert qr.details["worst_pair"] == 3
    assert qr.sup_weighted == pytest.approx(max(qr.details["per_pair_sup"]), rel=1e-15)


def test_integral_criterion_zero_probes():
    model = diagonal_model(3, prefix=(0.1, 0.2, 0.3))
    qr = integral_criterion(model, PROFILE, probes=np.zeros((2, 3)))
    assert qr.sup_weighted == 0.0
    assert qr.details["pairs"] == 0
