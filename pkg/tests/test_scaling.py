import math
from functools import lru_cache

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from baxxz.acceptance import curvature_peaks
from baxxz.chain import ChainSpec
from baxxz.entanglement import purity_W, renyi_entropy
from baxxz.exact_diag import entanglement_spectrum
from baxxz.free_fermion import correlation_matrix, ground_energy_thermo, renyi_from_occupations
from baxxz.scaling import (BoundaryExtremumError, NoSignChangeError, ScalingError, SweepCurve,
                           argmax_refined, curvature_curve, curvature_from_samples,
                           curvature_peak, energy_curvature, extrapolate, pseudo_critical_S2,
                           pseudo_critical_Sinf)


@lru_cache(maxsize=None)
def delta_sweep(N, delta, L_A, step=0.1):
    """Delta in [0, 6]: (grid, S_2, xi_0, W)."""
    g = np.round(np.arange(0.0, 6.0 + 1e-9, step), 10)
    S2, xi0, W = [], [], []
    for D in g:
        es = entanglement_spectrum(ChainSpec(N, delta, D, L_A=L_A))[1]
        S2.append(renyi_entropy(es.probabilities, 2.0))
        xi0.append(es.xi[0])
        W.append(purity_W(es.probabilities))
    return g, np.array(S2), np.array(xi0), np.array(W)


def test_curve_validation():
    with pytest.raises(ScalingError):
        SweepCurve([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(ScalingError):
        SweepCurve([0.0, 1.0], [1.0, np.nan])
    with pytest.raises(ScalingError):
        SweepCurve([0.0, 1.0], [1.0])


@given(g=st.floats(-10, 10), eps=st.floats(1e-3, 1.0))
def test_quadratic_curvature(g, eps):
    e = lambda x: x * x
    assert energy_curvature(e(g - eps), e(g), e(g + eps), eps) == pytest.approx(-2.0, abs=1e-6)


def test_quadratic_curvature_exact_on_dyadic_points():
    assert energy_curvature(0.25, 1.0, 2.25, 0.5) == -2.0


def test_curvature_from_samples():
    assert curvature_from_samples([1.0, 1.5, 2.0], [1.0, 2.25, 4.0]) == -2.0
    with pytest.raises(ScalingError, match="non-uniform"):
        curvature_from_samples([1.0, 1.5, 2.1], [1.0, 2.25, 4.41])
    with pytest.raises(ScalingError):
        energy_curvature(0.0, 0.0, 0.0, 0.0)


def test_thermo_curvature_matches_analytic_derivative():
    with mpmath.workdps(30):
        exact = -float(mpmath.diff(lambda d: -4 / mpmath.pi * mpmath.ellipe(1 - d * d),
                                   mpmath.mpf("0.5"), 2))
    # central difference: O(eps^2) truncation
    coarse = curvature_curve(ground_energy_thermo, [0.5], 5e-3).values[0]
    fine = curvature_curve(ground_energy_thermo, [0.5], 1e-3).values[0]
    assert coarse == pytest.approx(exact, rel=1e-4)
    assert abs(fine - exact) < abs(coarse - exact) / 10


def test_curvature_grows_toward_gap_closing():
    chis = [abs(curvature_curve(ground_energy_thermo, [d], d / 10).values[0])
            for d in (0.1, 0.03, 0.01)]
    assert chis[0] < chis[1] < chis[2]


def test_synthetic_s2_maximum():
    g = np.round(np.arange(0.0, 4.0 + 1e-9, 0.1), 10)
    assert pseudo_critical_S2(SweepCurve(g, 1 - (g - 2) ** 2)) == pytest.approx(2.0, abs=1e-8)


@given(c=st.floats(0.35, 3.65), w=st.floats(0.3, 3.0))
def test_parabolic_refinement_is_exact_for_parabolas(c, w):
    g = np.linspace(0, 4, 41)
    assert argmax_refined(SweepCurve(g, -w * (g - c) ** 2)) == pytest.approx(c, abs=1e-8)


def test_boundary_maximum_is_an_error():
    g = np.linspace(0, 1, 11)
    with pytest.raises(BoundaryExtremumError, match="boundary"):
        pseudo_critical_S2(SweepCurve(g, -g))
    with pytest.raises(ScalingError):
        argmax_refined(SweepCurve([0.0, 1.0], [1.0, 0.0]))


def test_thermodynamic_s2_peaks_at_gap_closing():
    g = np.round(np.arange(-0.2, 0.2 + 1e-9, 0.02), 10)
    S2 = [renyi_from_occupations(correlation_matrix(None, d, 64).q, 2.0) for d in g]
    assert abs(pseudo_critical_S2(SweepCurve(g, S2))) <= 0.02


def test_ed_s2_pseudo_critical_point():
    g, S2, _, _ = delta_sweep(16, 0.3, 8)
    assert 2.5 < pseudo_critical_S2(SweepCurve(g, S2)) < 4.5


def test_synthetic_xi0_minimum():
    g = np.round(np.arange(0.0, 6.0 + 1e-9, 0.1), 10)
    gs = pseudo_critical_Sinf(SweepCurve(g, (g - 3) ** 2 + 1))
    assert gs == pytest.approx(3.0, abs=0.1)


def test_stationary_point_inside_window():
    g = np.linspace(0, 6, 61)
    y = np.cos(g)  # stationary at pi and 2pi - outside
    assert pseudo_critical_Sinf(SweepCurve(g, y)) == pytest.approx(math.pi, abs=1e-2)
    with pytest.raises(NoSignChangeError):
        pseudo_critical_Sinf(SweepCurve(g, y), window=(4.0, 6.0))


def test_constant_xi0_has_no_stationary_point(ed):
    g = [0.0, 1.0, 2.0, 3.0, 4.0]
    xi0 = [ed(8, 1.0, D, 4)[1].xi[0] for D in g]
    with pytest.raises(NoSignChangeError, match="no sign change"):
        pseudo_critical_Sinf(SweepCurve(g, xi0))


def test_ed_xi0_stationary_point():
    g, _, xi0, _ = delta_sweep(16, 0.3, 8)
    assert 0.0 < pseudo_critical_Sinf(SweepCurve(g, xi0)) < 6.0


def test_purity_and_s2_extrema_coincide():
    g, S2, _, W = delta_sweep(16, 0.3, 8)
    assert np.argmin(W) == np.argmax(S2)
    assert argmax_refined(SweepCurve(g, -W)) == pytest.approx(
        argmax_refined(SweepCurve(g, S2)), abs=1e-3)


def test_curvature_peak_on_known_profile():
    # -e'' = 1 / (1 + (g - 3.3)^2)
    def e(g):
        x = g - 3.3
        return -(x * math.atan(x) - 0.5 * math.log1p(x * x))

    g_star, height, fine = curvature_peak(e, np.arange(0.0, 6.0 + 1e-9, 0.25), 0.05)
    assert g_star == pytest.approx(3.3, abs=1e-3)
    assert height == pytest.approx(1.0, abs=1e-3)
    assert fine.g[0] >= 2.75 and fine.g[-1] <= 3.75


def test_exact_power_law_recovered():
    N = np.arange(8, 33, 4)
    fit = extrapolate(N, 3.6 + 2 / N)
    assert fit.g_c == pytest.approx(3.6, abs=1e-6)
    assert fit.theta == pytest.approx(1.0, abs=1e-6)
    assert fit.a == pytest.approx(2.0, abs=1e-5)
    assert fit.inv_theta == pytest.approx(1.0, abs=1e-6)
    assert fit.residual < 1e-10


@given(gc=st.floats(1.0, 5.0), a=st.floats(-5, 5).filter(lambda x: abs(x) > 0.1),
       theta=st.floats(0.5, 2.5))
def test_power_law_family_recovered(gc, a, theta):
    N = np.arange(8, 33, 4)
    fit = extrapolate(N, gc + a * N ** (-theta))
    assert fit.g_c == pytest.approx(gc, abs=1e-5)
    assert fit.theta == pytest.approx(theta, abs=1e-4)


def test_fit_input_errors():
    with pytest.raises(ScalingError):
        extrapolate([8, 12], [3.0, 3.1])
    with pytest.raises(ScalingError):
        extrapolate([8, 12, 16], [3.0, np.nan, 3.1])


def test_noisy_power_law_monte_carlo():
    rng = np.random.default_rng(0)
    N = np.arange(8, 33, 4)
    clean = 3.6 + 2 / N
    errors = []
    for _ in range(100):
        try:
            errors.append(abs(extrapolate(N, clean * (1 + 0.01 * rng.standard_normal(len(N)))).g_c
                              - 3.6))
        except ScalingError:
            errors.append(math.inf)
    assert max(errors) < 0.05


def test_refit_without_smallest_size_within_uncertainty():
    # with noise of known size the reported uncertainty should cover the refit shift
    rng = np.random.default_rng(1)
    N = np.arange(8, 41, 4)
    hits = trials = 0
    for _ in range(200):
        y = 3.6 + 2 / N + 1e-3 * rng.standard_normal(len(N))
        try:
            full, drop = extrapolate(N, y), extrapolate(N[1:], y[1:])
        except ScalingError:
            continue
        trials += 1
        hits += abs(full.g_c - drop.g_c) < drop.g_c_stderr
    assert trials >= 190 and hits / trials >= 0.68


@pytest.mark.slow
def test_curvature_peak_grows_with_size():
    peaks = curvature_peaks()
    heights = [peaks[N][1] for N in (8, 12, 16)]
    assert heights[0] < heights[1] < heights[2]


@pytest.mark.slow
def test_ed_series_extrapolation():
    peaks = curvature_peaks()
    fit = extrapolate(list(peaks), [p[0] for p in peaks.values()])
    assert math.isfinite(fit.g_c) and fit.theta > 0
    assert math.isfinite(fit.residual) and fit.residual >= 0
