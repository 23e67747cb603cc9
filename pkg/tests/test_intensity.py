import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from zerodensity.basis import chebyshev, hermite, legendre, monomial
from zerodensity.intensity import (CD_ERROR_BUDGET, BranchCutError, IntensityPath,
                                   NegativeIntensityError, ResolutionError,
                                   UnsupportedPointError, WeightClassError, _finalize,
                                   asymptotic_pn, general_density, intensity_general,
                                   intensity_limit, intensity_oprl, joukowski_xi,
                                   knn_density, limit_density, oprl_density,
                                   szego_function)
from zerodensity.kernels import NotOrthonormalError, axis_threshold
from zerodensity.montecarlo import mc_density

OPRL = {"legendre": legendre, "chebyshev": chebyshev, "hermite": hermite}


def test_monomial_degree_one_closed_form():
    for z in (0, 0.5 - 2j, 3 + 3j):
        h = intensity_general(monomial(), 1, z)
        assert h.h == pytest.approx(1 / (math.pi * (1 + abs(z) ** 2) ** 2), rel=1e-13)
        assert h.path is IntensityPath.GENERAL_DIRECT
    assert intensity_general(monomial(), 1, 0).h == pytest.approx(0.318309886, rel=1e-9)


@pytest.mark.parametrize("factory", [monomial, legendre, chebyshev, hermite])
def test_degree_zero_has_no_zeros(factory):
    assert intensity_general(factory(), 0, 0.3 + 0.1j).h == 0.0
    if factory is not monomial:
        assert intensity_oprl(factory(), 0, 0.3 + 0.1j).h == 0.0


def test_monomial_density_on_real_axis_matches_monte_carlo():
    h = intensity_general(monomial(), 5, 0.9).h
    mc = mc_density(monomial(), 5, 0.9, 0.05, 100_000, seed=5)
    assert abs(mc.mean - h) <= 3 * mc.stderr, (mc, h)


def test_oprl_matches_general_example():
    a = intensity_oprl(legendre(), 10, 0.3 + 0.2j)
    b = intensity_general(legendre(), 10, 0.3 + 0.2j)
    assert a.path is IntensityPath.OPRL_CD
    assert abs(a.h - b.h) <= 1e-9 * b.h
    assert b.h == pytest.approx(oracles.density("legendre", 10, 0.3 + 0.2j), rel=1e-13)


@pytest.mark.parametrize("name", OPRL)
def test_real_points_fall_back_to_finite_direct_value(name):
    for x in (-0.7, 0.0, 0.4, 1.8):
        v = intensity_oprl(OPRL[name](), 9, x)
        assert v.path is IntensityPath.GENERAL_DIRECT
        assert math.isfinite(v.h) and v.h > 0
        assert v.h == pytest.approx(oracles.density(name, 9, x), rel=1e-11)


def test_oprl_requires_orthonormal_family():
    with pytest.raises(NotOrthonormalError):
        intensity_oprl(monomial(), 3, 1j)


def test_chebyshev_degree_fifty_near_limit():
    z = 1.5 + 0.5j
    assert abs(intensity_oprl(chebyshev(), 50, z).h - intensity_limit(z).h) <= 0.05 * intensity_limit(z).h


@pytest.mark.parametrize("name", OPRL)
@pytest.mark.parametrize("n", [2, 10, 50])
def test_guarded_closed_form_is_accurate_against_high_precision(name, n):
    """Points served by the closed form stay within 1e-9 of a 60-digit oracle,
    including the near-axis band where the raw form loses digits."""
    rng = np.random.default_rng(100 + n)
    z = rng.uniform(-2.5, 2.5, 40) + 1j * np.exp(rng.uniform(math.log(1e-3), math.log(5), 40))
    h, served = oprl_density(OPRL[name](), n, z, return_mask=True)
    for zi, hi in zip(z, h):
        ref = oracles.density(name, n, complex(zi))
        assert abs(hi - ref) <= 1e-9 * ref
    assert served.any()


def test_error_estimate_flags_the_ill_conditioned_band():
    # Legendre n=200 close to the axis outside the support: the raw closed
    # form is off by more than 1e-7 there, and the estimate must say so
    b = legendre()
    z = np.array([1.7 + 2e-3j, -2.2 + 1e-3j])
    h_cd, err = knn_density(b, 200, z)
    exact = np.array([oracles.density("legendre", 200, complex(w)) for w in z])
    actual = np.abs(h_cd - exact) / exact
    assert np.all(err >= actual)
    assert np.all(err > CD_ERROR_BUDGET)
    assert np.allclose(oprl_density(b, 200, z), exact, rtol=1e-10)


@pytest.mark.parametrize("name", OPRL)
def test_seam_at_axis_threshold_is_continuous(name):
    b = OPRL[name]()
    x = 0.3
    # tau solves y = axis_threshold(x + iy); a few fixed-point steps suffice
    tau = 1e-4
    for _ in range(5):
        tau = float(axis_threshold(complex(x, tau)))
    below = oprl_density(b, 10, complex(x, tau * (1 - 1e-9)))
    above = oprl_density(b, 10, complex(x, tau * (1 + 1e-9)))
    assert abs(above - below) < 1e-7
    h_raw, _ = knn_density(b, 10, np.array([complex(x, tau * (1 + 1e-9))]))
    assert abs(h_raw[0] - below) < 1e-7 * below


def test_joukowski_examples():
    assert joukowski_xi(1.25).xi == pytest.approx(2.0, abs=1e-15)
    assert joukowski_xi(-1.25).xi == pytest.approx(-2.0, abs=1e-15)
    assert joukowski_xi(1j).xi == pytest.approx((1 + math.sqrt(2)) * 1j, rel=1e-15)
    for z in (0.0, 0.99, -1.0, 0.5 + 1e-13j):
        with pytest.raises(BranchCutError):
            joukowski_xi(z)


@settings(max_examples=200, deadline=None)
@given(st.floats(-6, 6), st.floats(-6, 6))
def test_joukowski_inverse_invariants(x, y):
    z = complex(x, y)
    if abs(z - min(max(x, -1), 1)) <= 1e-6:
        return
    xi = joukowski_xi(z).xi
    assert abs(xi) > 1
    assert abs((xi + 1 / xi) / 2 - z) <= 1e-12 * max(1, abs(z))


def test_limit_density_against_high_precision():
    z = 1.5 + 0.5j
    h = intensity_limit(z)
    assert h.path is IntensityPath.SZEGO_LIMIT
    assert h.h == pytest.approx(oracles.limit_density(z), rel=1e-13)
    assert abs(intensity_oprl(chebyshev(), 200, z).h - h.h) <= 0.01 * h.h


def test_limit_density_equivalent_form():
    rng = np.random.default_rng(3)
    z = rng.uniform(-3, 3, 200) + 1j * rng.uniform(0.05, 3, 200)
    s = np.sqrt(z * z - 1)
    xi = np.where(np.abs(z + s) > 1, z + s, z - s)
    alt = (1 - ((np.abs(xi) ** 2 - 1) / np.abs(xi * xi - 1)) ** 2) / (4 * np.pi * z.imag ** 2)
    assert np.allclose(limit_density(z), alt, rtol=1e-9)


def test_limit_density_symmetry_and_weight_independence():
    z = 0.4 + 0.8j
    assert intensity_limit(z.conjugate()).h == pytest.approx(intensity_limit(z).h, rel=1e-14)
    h_inf = intensity_limit(z).h
    for b in (legendre(), chebyshev()):
        assert abs(intensity_oprl(b, 200, z).h - h_inf) <= 0.02 * h_inf


def test_limit_density_domain_errors():
    with pytest.raises(BranchCutError):
        intensity_limit(0.3)
    with pytest.raises(UnsupportedPointError):
        intensity_limit(2.0)
    out = limit_density(np.array([0.3, 2.0, 1.5 + 0.5j]), on_invalid="nan")
    assert np.isnan(out[:2]).all() and np.isfinite(out[2])


def test_szego_constant_weights():
    for xi in (0, 0.3 + 0.4j, -0.9):
        assert szego_function(lambda t: np.ones_like(t), xi) == pytest.approx(1.0, abs=1e-14)
        assert szego_function(lambda t: np.full_like(t, 4.0), xi) == pytest.approx(2.0, rel=1e-13)


def test_szego_smooth_weight_closed_form():
    # f(t) = |1 - a e^{it}|^2 is the boundary modulus of the outer function 1 - a xi
    a = 0.6
    f = lambda t: 1 - 2 * a * np.cos(t) + a * a
    for xi in (0, 0.5, 0.3 - 0.6j, 0.9j):
        assert szego_function(f, xi) == pytest.approx(1 - a * xi, rel=1e-13)


def test_szego_legendre_closed_form_converges_first_order():
    # |sin t| has D(xi) = sqrt((1 - xi^2) / 2); its log singularities at
    # t = 0, pi limit the uniform rule to O(1/m)
    xi = 0.3 - 0.6j
    exact = np.sqrt((1 - xi * xi) / 2)
    errs = [abs(szego_function(lambda t: np.abs(np.sin(t)), xi, m=m) - exact) / abs(exact)
            for m in (1 << 14, 1 << 15, 1 << 16)]
    assert errs[-1] < 2e-5
    for e1, e2 in zip(errs, errs[1:]):
        assert e2 == pytest.approx(e1 / 2, rel=0.05)


def test_szego_even_weight_gives_positive_center_value():
    d = szego_function(lambda t: 2 + np.cos(t), 0)
    assert abs(d.imag) < 1e-15 and d.real > 0


def test_szego_errors():
    with pytest.raises(WeightClassError):
        szego_function(lambda t: np.sin(t), 0.1)
    with pytest.raises(ResolutionError):
        szego_function(lambda t: np.ones_like(t), 0.9995)
    with pytest.raises(ResolutionError):
        szego_function(lambda t: np.ones_like(t), 0.99, m=1000)
    assert szego_function(lambda t: np.ones_like(t), 0.99, m=5000) == pytest.approx(1.0)


def test_chebyshev_asymptotic_error_is_xi_to_minus_forty():
    # xi = 2 at z = 1.25; the error is xi^-40 / (1 + xi^-40) exactly
    approx, err = asymptotic_pn(chebyshev(), None, 20, 1.25)
    assert approx == pytest.approx(2.0 ** 20 / math.sqrt(2 * math.pi), rel=1e-14)
    assert 0.5 * 2.0 ** -40 <= err <= 2 * 2.0 ** -40


def test_chebyshev_asymptotic_error_at_roundoff_far_out():
    # at z = 1.5, xi = (3 + sqrt 5) / 2 and xi^-40 ~ 2e-17 sits below roundoff
    xi = (3 + math.sqrt(5)) / 2
    approx, err = asymptotic_pn(chebyshev(), None, 20, 1.5)
    assert approx == pytest.approx(xi ** 20 / math.sqrt(2 * math.pi), rel=1e-13)
    assert err < 1e-14


def test_legendre_asymptotic_error_decreases():
    errs = [asymptotic_pn(legendre(), None, n, 1.2 + 0.3j)[1] for n in (10, 20, 40)]
    assert errs[0] >= errs[1] >= errs[2]


def test_asymptotic_close_to_the_cut():
    # |xi| = 1.05 on the imaginary direction
    xi = 1.05j
    z = (xi + 1 / xi) / 2
    e10 = asymptotic_pn(legendre(), None, 10, z)[1]
    e100 = asymptotic_pn(legendre(), None, 100, z)[1]
    assert e100 < e10


def test_negative_values_clamp_or_raise():
    assert _finalize(np.array([-5e-13]), 0.0)[0] == 0.0
    with pytest.raises(NegativeIntensityError):
        _finalize(np.array([-1e-11]), 0.0)


@pytest.mark.parametrize("factory", [monomial, legendre, chebyshev, hermite])
def test_nonnegative_and_conjugation_symmetric(factory):
    rng = np.random.default_rng(8)
    z = rng.uniform(-3, 3, 1000) + 1j * rng.uniform(-3, 3, 1000)
    h = general_density(factory(), 12, z)
    hc = general_density(factory(), 12, np.conj(z))
    assert np.all(h >= 0)
    assert np.all(np.abs(h - hc) <= 1e-12 * h)


def test_monomial_rotational_symmetry():
    angles = np.exp(2j * np.pi * np.arange(16) / 16)
    for r in (0.5, 1.0, 2.0):
        h = general_density(monomial(), 7, r * angles)
        assert np.ptp(h) <= 1e-12 * h.max()


def test_chebyshev_limit_gap_decreases_in_high_precision():
    """The true Chebyshev gap shrinks like |xi|^-2n, far below double
    roundoff once n >= 25; a 250-digit evaluation shows it decreasing."""
    X, Y = np.meshgrid(np.linspace(1.2, 2, 4), np.linspace(0.2, 1, 4))
    for z in (X + 1j * Y).ravel():
        with mp.workdps(250):
            gaps = []
            for n in (25, 50, 100, 200):
                hn = oracles.density_mp("chebyshev", n, complex(z), dps=250)
                gaps.append(abs(hn - oracles.limit_density_mp(complex(z), dps=250)))
            assert gaps[0] > gaps[1] > gaps[2] > gaps[3] > 0
            assert gaps[0] < mp.mpf(10) ** -12
