"""Executable acceptance checks (numbered 1 to 11).

Each check returns a :class:`CriterionResult`; ``run_all`` prints one line per
check. Tolerances are the contractual ones and are never relaxed here.
"""

from __future__ import annotations

import hashlib
import math
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .chain import ChainSpec
from .entanglement import (catalyst_verdict, default_alpha_grid, dlc_column, majorization_column,
                           purity_W, renyi_curve, renyi_entropy, schmidt_gap)
from .exact_diag import (entanglement_spectrum, ground_state, labeled_entanglement_spectrum,
                         reduced_density_matrix)
from .free_fermion import (berry_phase, correlation_matrix, edge_mode_report,
                           ground_energy_per_site, ground_energy_thermo, occupation_products,
                           spectrum_from_block, winding_number)
from .scaling import curvature_peak, extrapolate
from .sweep import SweepConfig, run_sweep, write_tables


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"criterion {self.number:2d} [{'PASS' if self.passed else 'FAIL'}] {self.title}: {self.detail}"


def _es(N, delta, Delta, L_A):
    gs, es = entanglement_spectrum(ChainSpec(N, delta, Delta, L_A=L_A))
    return gs, es


def criterion_1() -> CriterionResult:
    alphas = default_alpha_grid()
    worst = 0.0
    for Delta in (0.0, 1.0, 4.0):
        for N in (8, 12, 16):
            gs = ground_state(ChainSpec(N, 1.0, Delta, L_A=N // 2))
            worst = max(worst, abs(gs.energy_per_site + (2.0 + Delta)))
            for L in range(2, N // 2 + 1, 2):
                full = reduced_density_matrix(gs, L).eigenvalues()
                target = np.zeros_like(full)
                target[:4] = 0.25
                worst = max(worst, np.max(np.abs(full - target)))
                w = labeled_entanglement_spectrum(reduced_density_matrix(gs, L)).omega
                w = w / w.sum()
                S = renyi_curve(w, alphas)
                worst = max(worst, np.max(np.abs(S - math.log(4))))
                worst = max(worst, abs(purity_W(w) - 1.0), abs(schmidt_gap(w)))
    return CriterionResult(1, "singlet-product fixed point", worst < 1e-10,
                           f"max deviation {worst:.2e} (tol 1e-10)")


def criterion_2() -> CriterionResult:
    alphas = default_alpha_grid()
    d_spec = d_S = d_E = 0.0
    for N in (8, 12, 16):
        for delta in (-0.5, 0.3, 0.9):
            for L in sorted({4, N // 2}):
                gs, es = _es(N, delta, 0.0, L)
                ed_full = reduced_density_matrix(gs).eigenvalues()
                block = correlation_matrix(N // 2, delta, L)
                ff_full = occupation_products(block.q)
                d_spec = max(d_spec, np.max(np.abs(ed_full - ff_full)))
                ff = spectrum_from_block(block)
                S_ed = renyi_curve(es.probabilities, alphas)
                S_ff = renyi_curve(ff.probabilities, alphas)
                d_S = max(d_S, np.max(np.abs(S_ed - S_ff)))
                d_E = max(d_E, abs(gs.energy_per_site - ground_energy_per_site(N // 2, delta)))
    ok = d_spec < 1e-8 and d_S < 1e-8 and d_E < 1e-9
    return CriterionResult(2, "free-fermion vs exact diagonalization", ok,
                           f"spectra {d_spec:.1e}, S_alpha {d_S:.1e}, energy {d_E:.1e}")


def criterion_3() -> CriterionResult:
    worst = max(abs(ground_energy_per_site(10**6, d) - ground_energy_thermo(d))
                for d in (0.0, 0.1, 0.5, 0.9))
    zero = abs(ground_energy_thermo(0.0) + 4.0 / math.pi)
    ok = worst < 1e-6 and zero < 1e-12
    return CriterionResult(3, "thermodynamic energy", ok,
                           f"finite-M gap {worst:.1e}, |e0(0) + 4/pi| = {zero:.1e}")


def criterion_4() -> CriterionResult:
    worst_q = worst_r = 0.0
    for d in (-0.9, -0.5, -0.1, 0.1, 0.5, 0.9):
        n = winding_number(d)
        gam = berry_phase(d)
        diff = (gam - n * math.pi + math.pi) % (2 * math.pi) - math.pi
        worst_q = max(worst_q, abs(diff))
        worst_r = max(worst_r, abs(berry_phase(d, 512) - gam), abs(berry_phase(d, 1024) - gam))
    ok = worst_q < 1e-6 and worst_r < 1e-8
    return CriterionResult(4, "winding number and Berry phase", ok,
                           f"|gamma - n pi| {worst_q:.1e}, refinement drift {worst_r:.1e}")


def criterion_5() -> CriterionResult:
    block = correlation_matrix(512, 0.3, 64)
    near = int(np.sum(np.abs(block.q - 0.5) < 1e-6))
    w = spectrum_from_block(block).omega[:4]
    spread = (w[0] - w[3]) / w[0]
    lams = [edge_mode_report(correlation_matrix(512, 0.3, L)).lam for L in (8, 16, 32, 64)]
    mono = all(abs(b) < abs(a) for a, b in zip(lams, lams[1:]))
    ok = near == 2 and spread < 1e-5 and mono
    return CriterionResult(5, "edge factorization", ok,
                           f"{near} occupations at 1/2, top-4 spread {spread:.1e}, "
                           f"lambda {', '.join(f'{x:.2e}' for x in lams)}")


def _dlc_col(N, delta, Delta, L, eps=5e-3):
    alphas = default_alpha_grid()
    a = renyi_curve(_es(N, delta, Delta, L)[1].probabilities, alphas)
    b = renyi_curve(_es(N, delta, Delta + eps, L)[1].probabilities, alphas)
    return dlc_column(a, b, 1e-12)


def criterion_6() -> CriterionResult:
    low = _dlc_col(16, 0.3, 0.5, 4)
    high = _dlc_col(16, 0.3, 5.0, 4)
    mixed = bool(np.any(low > 0) and np.any(low < 0))
    uniform_pos = bool(np.all(high == 1))
    return CriterionResult(
        6, "convertibility pattern", mixed and uniform_pos,
        f"Delta=0.5: +{int(np.sum(low > 0))}/-{int(np.sum(low < 0))}; "
        f"Delta=5: +{int(np.sum(high > 0))}/-{int(np.sum(high < 0))}/0:{int(np.sum(high == 0))}")


def criterion_7() -> CriterionResult:
    below = _dlc_col(16, 0.3, 1.0 - 5e-3, 8)
    above = _dlc_col(16, 0.3, 1.0, 8)
    ok = bool(np.all(below != 0) and np.all(below == -above))
    return CriterionResult(7, "sign flip at the SU(2) point", ok,
                           f"{int(np.sum(below == -above))}/{len(below)} alphas flip")


def criterion_8() -> CriterionResult:
    eps = 5e-3
    alphas = default_alpha_grid()
    e1 = _es(16, 0.3, 5.0, 8)[1].probabilities
    e2 = _es(16, 0.3, 5.0 + eps, 8)[1].probabilities
    maj = majorization_column(e1, e2)
    dl = dlc_column(renyi_curve(e1, alphas), renyi_curve(e2, alphas))
    rep = catalyst_verdict(dl, maj)
    uniform = (rep.maj_positive == 0) != (rep.maj_negative == 0)
    ok = uniform and rep.catalyst_free
    return CriterionResult(8, "catalyst-free conversion in the Neel phase", ok,
                           f"M(k) +{rep.maj_positive}/-{rep.maj_negative}, verdict "
                           f"{rep.verdict.value}")


@lru_cache(maxsize=None)
def curvature_peaks(sizes=(8, 12, 16, 20), delta=0.3, L_A=4) -> dict[int, tuple[float, float]]:
    """``{N: (Delta*, chi_max)}`` from a coarse Delta scan on [1.5, 6] refined to 0.05."""
    coarse = np.arange(1.5, 6.0 + 1e-9, 0.25)
    out = {}
    for N in sizes:
        def e(D, N=N):
            return ground_state(ChainSpec(N, delta, D, L_A=L_A)).energy_per_site
        g, h, _ = curvature_peak(e, coarse, 0.05, 5e-3)
        out[N] = (g, h)
    return out


def criterion_9(sizes=(8, 12, 16, 20)) -> CriterionResult:
    peaks = curvature_peaks(tuple(sizes))
    heights = [peaks[N][1] for N in sizes if N <= 16]
    grow = all(a < b for a, b in zip(heights, heights[1:]))
    fit = extrapolate(list(peaks), [peaks[N][0] for N in peaks])
    ok = grow and 3.0 <= fit.g_c <= 4.2
    pk = ", ".join(f"N={N}: {g:.3f} ({h:.4f})" for N, (g, h) in peaks.items())
    return CriterionResult(9, "curvature peak and extrapolation", ok,
                           f"{pk}; g_c = {fit.g_c:.3f}, theta = {fit.theta:.2f}")


def _random_spectra(n=100, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        k = int(rng.integers(2, 65))
        w = np.sort(rng.dirichlet(np.ones(k)))[::-1]
        # the large-alpha limit is only stated for a resolved top level
        if w[0] >= 1.01 * w[1]:
            out.append(w)
    return out


def criterion_10() -> CriterionResult:
    spectra = _random_spectra()
    d1 = d_inf = 0.0
    alphas = default_alpha_grid()
    mono = True
    for w in spectra:
        sv = renyi_entropy(w, 1.0)
        d1 = max(d1, abs(renyi_entropy(w, 1 + 1e-4) - sv), abs(renyi_entropy(w, 1 - 1e-4) - sv))
        d_inf = max(d_inf, abs(renyi_entropy(w, 1e3) + math.log(w.max())))
        mono &= bool(np.all(np.diff(renyi_curve(w, alphas)) <= 1e-12))
    for N, d, D, L in ((12, 0.3, 0.5, 4), (12, 0.3, 5.0, 6), (12, -0.5, 2.0, 6)):
        mono &= bool(np.all(np.diff(renyi_curve(_es(N, d, D, L)[1].probabilities, alphas))
                            <= 1e-12))
    ok = d1 < 1e-6 and d_inf < 1e-3 and mono
    return CriterionResult(10, "entropy limits", ok,
                           f"|S(1+-1e-4) - S_v| {d1:.1e}, |S(1e3) - xi0| {d_inf:.1e}, "
                           f"monotone {mono}")


def _digest(paths) -> str:
    h = hashlib.sha256()
    for p in sorted(paths):
        h.update(Path(p).name.encode())
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def criterion_11() -> CriterionResult:
    cfg = SweepConfig(backend="exact-diag", axis="Delta", start=0.5, stop=1.5, step=0.5,
                      fixed=[0.3], N=[8, 10], L_A=[2, 4], curvature=True)
    digests = []
    with tempfile.TemporaryDirectory() as tmp:
        for k in (1, 2, 8):
            res = run_sweep(cfg, workers=k, use_cache=False)
            digests.append(_digest(write_tables(res, Path(tmp) / f"w{k}")))
        cache = Path(tmp) / "cache"
        first = run_sweep(cfg, workers=2, use_cache=True, cache_dir=cache)
        replay = run_sweep(cfg, workers=2, use_cache=True, cache_dir=cache)
        digests.append(_digest(write_tables(replay, Path(tmp) / "replay")))
    same = len(set(digests)) == 1
    ok = same and replay.evaluations == 0 and first.evaluations > 0
    return CriterionResult(11, "orchestration determinism", ok,
                           f"digests identical: {same}; replay evaluations {replay.evaluations}")


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


def run_all(numbers=None, echo=print) -> list[CriterionResult]:
    out = []
    for i in numbers or sorted(CRITERIA):
        try:
            r = CRITERIA[i]()
        except Exception as exc:
            r = CriterionResult(i, "error", False, f"{type(exc).__name__}: {exc}")
        if echo:
            echo(r.line())
        out.append(r)
    return out
