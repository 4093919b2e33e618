import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from baxxz.entanglement import (ConvertibilityMap, RenyiGrid, Verdict, catalyst_verdict,
                                default_alpha_grid, dlc_column, dlc_map, majorization_column,
                                majorization_map, pad_spectra, purity_W, renyi_curve,
                                renyi_entropy, renyi_grid, schmidt_gap)

ALPHAS = default_alpha_grid()

spectra = st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=40).map(
    lambda x: np.array(x) / np.sum(x))


def test_alpha_grid_layout():
    assert len(ALPHAS) == 202
    assert ALPHAS[0] == pytest.approx(1e-2) and ALPHAS[-2] == pytest.approx(1e3)
    assert np.isinf(ALPHAS[-1]) and 1.0 in ALPHAS
    assert np.all(np.diff(ALPHAS) > 0)


@pytest.mark.parametrize("alpha", [0.01, 0.5, 1.0, 2.0, 1e3, math.inf])
def test_flat_spectrum(alpha):
    assert renyi_entropy(np.full(4, 0.25), alpha) == pytest.approx(math.log(4), abs=1e-14)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 7.0, math.inf])
def test_pure_state(alpha):
    assert renyi_entropy(np.array([1.0, 0.0, 0.0]), alpha) == 0.0


def test_min_entropy():
    assert renyi_entropy([0.9, 0.1], math.inf) == pytest.approx(-math.log(0.9), abs=1e-15)


def test_rank_limit_and_zero_alpha():
    w = [0.5, 0.5 - 1e-14, 1e-14]
    assert renyi_entropy(w, 0.0, rank_limit=True) == pytest.approx(math.log(2))
    assert renyi_entropy(w, 0.0) == pytest.approx(math.log(3))


@pytest.mark.parametrize("bad", [[0.5, 0.4], [1.2, -0.2], []])
def test_invalid_spectra(bad):
    with pytest.raises(ValueError):
        renyi_entropy(bad, 2.0)


@given(w=spectra, alpha=st.floats(0.01, 200).filter(lambda a: abs(a - 1) > 1e-3))
def test_renyi_matches_direct_formula(w, alpha):
    ref = math.log(math.fsum(w**alpha)) / (1 - alpha)
    assert renyi_entropy(w, alpha) == pytest.approx(ref, abs=1e-10, rel=1e-10)


@given(w=spectra)
def test_renyi_non_increasing_in_alpha(w):
    assert np.all(np.diff(renyi_curve(w, ALPHAS)) <= 1e-12)


@given(w=spectra)
def test_renyi_bounds(w):
    S = renyi_curve(w, ALPHAS)
    assert np.all(S >= -1e-15) and np.all(S <= math.log(len(w)) + 1e-12)
    assert S[-1] == pytest.approx(-math.log(w.max()), abs=1e-13)


@given(w=spectra)
def test_purity_is_exponential_of_s2(w):
    assert purity_W(w) == pytest.approx(4 * math.exp(-renyi_entropy(w, 2.0)), rel=1e-12)


@pytest.mark.parametrize("w, W", [(np.full(4, 0.25), 1.0), (np.array([1.0]), 4.0)])
def test_purity_examples(w, W):
    assert purity_W(w) == pytest.approx(W, abs=1e-15)


@pytest.mark.parametrize("w, G", [(np.full(4, 0.25), 0.0), ([0.5, 0.3, 0.2], 0.2)])
def test_schmidt_gap_examples(w, G):
    assert schmidt_gap(w) == pytest.approx(G, abs=1e-15)


def test_schmidt_gap_needs_two_levels():
    with pytest.raises(ValueError):
        schmidt_gap([1.0])


def test_schmidt_gap_vanishes_at_dimer_point(ed):
    assert schmidt_gap(ed(8, 1.0, 2.0, 4)[1].probabilities) == pytest.approx(0.0, abs=1e-12)


def test_dlc_dead_zone():
    a = np.array([1.0, 2.0, 3.0, 4.0])
    b = a + np.array([5e-13, -2e-12, 0.0, 1e-3])
    assert dlc_column(a, b).tolist() == [0, -1, 0, 1]
    with pytest.raises(ValueError):
        dlc_column(a, b[:3])


def test_dlc_map_shapes_and_precomputed_curves():
    w1, w2 = np.array([0.6, 0.4]), np.array([0.7, 0.3])
    m = dlc_map([0.0, 1.0], [(w1, w2), (w2, w1)])
    assert isinstance(m, ConvertibilityMap) and m.sign.shape == (2, len(ALPHAS))
    assert np.all(m.sign[0] == -1) and np.all(m.sign[1] == 1)
    pre = dlc_map([0.0], [(renyi_grid(w1), renyi_grid(w2))])
    assert np.array_equal(pre.sign[0], m.sign[0])
    with pytest.raises(ValueError):
        dlc_map([0.0, 1.0], [(w1, w2)])
    with pytest.raises(ValueError):
        dlc_map([0.0], [(RenyiGrid(ALPHAS[:3], np.zeros(3)), w2)])


def test_dlc_vanishes_along_delta_at_dimer_point(ed):
    pairs = [(ed(8, 1.0, D, 4)[1].probabilities, ed(8, 1.0, D + 5e-3, 4)[1].probabilities)
             for D in (0.0, 1.0, 2.5, 4.0)]
    assert np.all(dlc_map([0.0, 1.0, 2.5, 4.0], pairs).sign == 0)


def test_majorization_examples():
    assert np.all(majorization_column([0.5, 0.3, 0.2], [0.5, 0.3, 0.2]) == 0)
    assert majorization_column([0.6, 0.4], [0.7, 0.3]).tolist() == [1, 0]


def test_padding_and_map():
    a, b = pad_spectra([0.5, 0.5], [0.25, 0.5, 0.25])
    assert a.tolist() == [0.5, 0.5, 0.0] and b.tolist() == [0.5, 0.25, 0.25]
    m = majorization_map([0.0, 1.0], [([0.5, 0.5], [1.0]), ([1.0], [0.5, 0.25, 0.25])])
    assert m.sign.shape == (2, 3)
    assert m.sign[0].tolist() == [1, 0, 0] and m.sign[1].tolist() == [-1, -1, 0]


@given(a=spectra, b=spectra)
def test_majorization_closure(a, b):
    x, y = pad_spectra(a, b)
    assert abs(np.cumsum(y)[-1] - np.cumsum(x)[-1]) < 1e-12
    assert majorization_column(a, b)[-1] == 0


def _t_transform(w, rng, steps):
    """Move weight from a smaller entry to a larger one (the result majorizes ``w``)."""
    w = w.copy()
    for _ in range(steps):
        i, j = rng.choice(len(w), 2, replace=False)
        if w[i] < w[j]:
            i, j = j, i
        t = rng.uniform(0, w[j])
        w[i] += t
        w[j] -= t
    return w


@given(w=spectra.filter(lambda w: len(w) >= 2), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=60)
def test_schur_concavity(w, seed):
    v = _t_transform(w, np.random.default_rng(seed), 3)
    maj = majorization_column(w, v)
    assert np.all(maj >= 0)
    # the more ordered state has no larger Renyi entropy anywhere
    assert np.all(renyi_curve(v, ALPHAS) <= renyi_curve(w, ALPHAS) + 1e-12)
    if np.all(maj[:-1] == 1):
        assert not np.any(dlc_column(renyi_curve(w, ALPHAS), renyi_curve(v, ALPHAS)) == 1)


@pytest.mark.parametrize("Delta", [0.5, 2.0, 5.0])
def test_majorization_and_dlc_consistent_on_ed_points(ed, Delta):
    a = ed(12, 0.3, Delta, 6)[1].probabilities
    b = ed(12, 0.3, Delta + 5e-3, 6)[1].probabilities
    maj = majorization_column(a, b)
    dl = dlc_column(renyi_curve(a, ALPHAS), renyi_curve(b, ALPHAS))
    if np.all(maj[:-1] == 1):
        assert not np.any(dl == 1)
    if np.all(maj[:-1] == -1):
        assert not np.any(dl == -1)


def test_verdicts():
    mixed = np.array([1, -1, 0])
    up, down = np.array([1, 1, 0]), np.array([-1, 0, -1])
    assert catalyst_verdict(mixed, np.array([1, 1, 0])).verdict is Verdict.NOT_CONVERTIBLE
    assert catalyst_verdict(up, np.array([1, -1, 0])).verdict is Verdict.CATALYST_UP
    assert catalyst_verdict(down, np.array([1, -1, 0])).verdict is Verdict.CATALYST_DOWN
    r = catalyst_verdict(down, np.array([1, 1, 0]))
    assert r.verdict is Verdict.CONVERTIBLE_DOWN and r.catalyst_free
    assert (r.dlc_positive, r.dlc_negative, r.maj_positive, r.maj_negative) == (0, 2, 2, 0)


def test_all_zero_columns_are_flagged():
    r = catalyst_verdict(np.zeros(5, int), np.zeros(3, int))
    assert r.verdict is Verdict.CONVERTIBLE_UP and r.degenerate and r.notes
    assert (r.dlc_positive, r.dlc_negative) == (0, 0)


@given(d=st.lists(st.sampled_from([-1, 0, 1]), min_size=1, max_size=30),
       m=st.lists(st.sampled_from([-1, 0, 1]), min_size=1, max_size=30))
def test_not_convertible_iff_both_dlc_signs(d, m):
    d = np.array(d)
    v = catalyst_verdict(d, np.array(m)).verdict
    assert (v is Verdict.NOT_CONVERTIBLE) == bool(np.any(d > 0) and np.any(d < 0))
