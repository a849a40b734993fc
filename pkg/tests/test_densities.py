"""Gaussian closed forms and grid quadrature fusion."""

import numpy as np
import pytest

from ppcr5 import (
    DegenerateFusionError,
    Gaussian1D,
    GridDensity1D,
    bayes_fuse_gaussian,
    gaussian_pair_grid,
    grid_bayes_fuse,
    grid_pcr5_fuse,
)


def grid_pair(g1, g2, n=4001, lo=None, hi=None):
    if lo is None or hi is None:
        lo, hi, _ = gaussian_pair_grid(g1, g2, n)
    return (
        GridDensity1D.from_gaussian(g1, lo, hi, n),
        GridDensity1D.from_gaussian(g2, lo, hi, n),
    )


# --- Bayesian closed form -------------------------------------------------

def test_bayes_gaussian_equal_sigmas_exact():
    out = bayes_fuse_gaussian(Gaussian1D(0.0, 1.0), Gaussian1D(1.0, 1.0))
    # variance sigma^2/2 = 0.5 exactly; the type carries its square root
    assert out.sigma == np.sqrt(0.5)
    assert out.mean == 0.5


def test_bayes_gaussian_same_source():
    out = bayes_fuse_gaussian(Gaussian1D(3.0, 2.0), Gaussian1D(3.0, 2.0))
    assert out.mean == pytest.approx(3.0, abs=1e-15)
    assert out.sigma**2 == pytest.approx(2.0, abs=1e-15)


def test_bayes_gaussian_unequal_sigmas_against_grid_product():
    g1, g2 = Gaussian1D(0.0, 1.0), Gaussian1D(3.0, 2.0)
    out = bayes_fuse_gaussian(g1, g2)
    assert out.sigma**2 == pytest.approx(0.8, abs=1e-14)
    assert out.mean == pytest.approx(0.6, abs=1e-14)
    d1, d2 = grid_pair(g1, g2, n=8001, lo=-20.0, hi=25.0)
    product = grid_bayes_fuse(d1, d2)
    assert product.mean() == pytest.approx(out.mean, abs=1e-6)
    assert product.variance() == pytest.approx(out.sigma**2, abs=1e-6)


def test_gaussian_requires_positive_sigma():
    with pytest.raises(ValueError):
        Gaussian1D(0.0, 0.0)
    with pytest.raises(ValueError):
        Gaussian1D(0.0, -1.0)


# --- grid machinery --------------------------------------------------------

def test_grid_density_normalizes_on_construction():
    d = GridDensity1D(0.0, 1.0, np.ones(11) * 7.0)
    assert d.integral() == pytest.approx(1.0, abs=1e-12)


def test_grid_density_rejects_bad_input():
    with pytest.raises(ValueError):
        GridDensity1D(0.0, 1.0, [1.0])  # single point
    with pytest.raises(ValueError):
        GridDensity1D(1.0, 0.0, np.ones(5))  # inverted bounds
    with pytest.raises(ValueError):
        GridDensity1D(0.0, 1.0, [1.0, -0.5, 1.0])  # negative value
    with pytest.raises(ValueError):
        GridDensity1D(0.0, 1.0, np.zeros(5))  # no mass


def test_grid_fuse_rejects_mismatched_grids():
    a = GridDensity1D.uniform(0.0, 1.0, 11)
    b = GridDensity1D.uniform(0.0, 2.0, 11)
    with pytest.raises(ValueError):
        grid_bayes_fuse(a, b)
    with pytest.raises(ValueError):
        grid_pcr5_fuse(a, b)


def test_grid_bayes_matches_closed_form_everywhere():
    g1, g2 = Gaussian1D(0.0, 1.0), Gaussian1D(1.0, 1.0)
    d1, d2 = grid_pair(g1, g2, n=4001, lo=-10.0, hi=10.0)
    fused = grid_bayes_fuse(d1, d2)
    expected = bayes_fuse_gaussian(g1, g2).pdf(fused.x)
    assert np.max(np.abs(fused.values - expected)) < 1e-6


def test_grid_bayes_uniform_prior_absorbed():
    g2 = Gaussian1D(0.5, 0.7)
    flat = GridDensity1D.uniform(-5.0, 5.0, 2001)
    d2 = GridDensity1D.from_gaussian(g2, -5.0, 5.0, 2001)
    fused = grid_bayes_fuse(flat, d2)
    assert np.max(np.abs(fused.values - d2.values)) < 1e-12
    both_flat = grid_bayes_fuse(flat, flat)
    assert np.max(np.abs(both_flat.values - flat.values)) < 1e-12


def test_grid_bayes_disjoint_supports_error():
    d1, d2 = grid_pair(Gaussian1D(-5.0, 0.2), Gaussian1D(5.0, 0.2), n=2001, lo=-10.0, hi=10.0)
    with pytest.raises(DegenerateFusionError):
        grid_bayes_fuse(d1, d2)


# --- conflict-redistribution on grids --------------------------------------

def test_grid_pcr5_self_fusion_is_probabilistic():
    d1, d2 = grid_pair(Gaussian1D(0.0, 1.0), Gaussian1D(0.0, 1.0), n=4001, lo=-10.0, hi=10.0)
    fused, defect = grid_pcr5_fuse(d1, d2)
    assert abs(defect) < 1e-4
    assert fused.integral() == pytest.approx(1.0, abs=1e-9)


def test_grid_pcr5_distant_keeps_both_modes():
    d1, d2 = grid_pair(Gaussian1D(0.0, 1.0), Gaussian1D(10.0, 1.0))
    fused, _ = grid_pcr5_fuse(d1, d2)
    maxima = fused.local_maxima()
    assert len(maxima) == 2
    assert abs(maxima[0] - 0.0) < 0.2
    assert abs(maxima[1] - 10.0) < 0.2


def test_grid_pcr5_close_means_unimodal_with_bounded_variance():
    # independent high-resolution quadrature of the same rule
    d1, d2 = grid_pair(Gaussian1D(0.0, 1.0), Gaussian1D(1.0, 1.0), n=16001, lo=-12.0, hi=13.0)
    fused, _ = grid_pcr5_fuse(d1, d2)
    assert len(fused.local_maxima()) == 1
    assert 0.5 < fused.variance() < 1.0


def test_grid_pcr5_commutative_within_quadrature():
    d1, d2 = grid_pair(Gaussian1D(0.0, 1.0), Gaussian1D(2.0, 1.5))
    ab, _ = grid_pcr5_fuse(d1, d2)
    ba, _ = grid_pcr5_fuse(d2, d1)
    assert np.max(np.abs(ab.values - ba.values)) < 1e-12


def test_grid_pcr5_mode_count_vs_separation():
    # two maxima once the means sit 6 sigma apart, one within 1 sigma;
    # the transition lies in between and is recorded, not asserted
    def n_modes(d):
        g1, g2 = Gaussian1D(0.0, 1.0), Gaussian1D(d, 1.0)
        d1, d2 = grid_pair(g1, g2)
        fused, _ = grid_pcr5_fuse(d1, d2)
        return len(fused.local_maxima())

    assert n_modes(6.0) == 2
    assert n_modes(8.0) == 2
    assert n_modes(1.0) == 1
    assert n_modes(0.5) == 1
    transition = next(d for d in np.arange(1.0, 6.01, 0.25) if n_modes(d) == 2)
    print(f"mode-split transition between {transition - 0.25:.2f} and {transition:.2f} sigma")


def test_grid_pcr5_identical_mean_variance_ordering():
    for sigma in (0.5, 1.0, 2.0):
        g = Gaussian1D(0.0, sigma)
        d1, d2 = grid_pair(g, g)
        fused, _ = grid_pcr5_fuse(d1, d2)
        assert sigma**2 / 2 < fused.variance() < sigma**2
