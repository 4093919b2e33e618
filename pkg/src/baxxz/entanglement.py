"""Renyi entropies, convertibility and majorization maps, catalyst verdicts.

All functions take plain probability vectors (numpy arrays of reduced
density-matrix eigenvalues) so they work for either backend.

Sign conventions: a DLC cell is ``sign(S_alpha(g + eps) - S_alpha(g))`` and a
majorization cell is ``sign(sum_{j<=k} omega_j(g + eps) - sum_{j<=k} omega_j(g))``.
A uniformly positive majorization column means the state at ``g + eps``
majorizes the one at ``g`` (it is less entangled), which by Schur concavity
forces every Renyi entropy to decrease; uniform majorization and DLC columns
therefore carry opposite signs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

RANK_FLOOR = 1e-13
NORMALIZATION_TOL = 1e-10
DLC_DEAD_ZONE = 1e-12
MAJORIZATION_DEAD_ZONE = 1e-13


def default_alpha_grid(n: int = 200, lo: float = 1e-2, hi: float = 1e3) -> np.ndarray:
    """``n`` log-spaced alphas in [lo, hi] plus the sentinels 1 and inf, sorted."""
    grid = np.logspace(np.log10(lo), np.log10(hi), n)
    grid = np.union1d(grid, [1.0])
    return np.append(grid, np.inf)


def _prepare(omega) -> np.ndarray:
    w = np.asarray(omega, dtype=float)
    if w.ndim != 1 or len(w) == 0:
        raise ValueError("omega must be a non-empty 1-d array")
    if np.any(w < -NORMALIZATION_TOL):
        raise ValueError("negative probabilities")
    total = w.sum()
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise ValueError(f"spectrum not normalized: sum = {total!r}")
    return np.sort(np.clip(w, 0.0, None))[::-1]


def renyi_entropy(omega, alpha: float, *, rank_limit: bool = False,
                  rank_floor: float = RANK_FLOOR) -> float:
    """``S_alpha = ln(sum omega^alpha) / (1 - alpha)``.

    ``alpha=1`` is the von Neumann entropy, ``alpha=inf`` is ``-ln omega_0``,
    and ``rank_limit=True`` gives the alpha -> 0 value ``ln #{omega > rank_floor}``.
    Evaluated in log-sum-exp form so alpha up to 1e3 neither underflows nor
    loses the ratio structure.
    """
    w = _prepare(omega)
    if rank_limit:
        return float(np.log(np.count_nonzero(w > rank_floor)))
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    w = w[w > 0]
    if np.isinf(alpha):
        return float(-np.log(w[0]))
    if alpha == 1:
        return float(-np.sum(w * np.log(w)))
    if alpha == 0:
        return float(np.log(len(w)))
    logs = np.log(w)
    top = logs[0]
    lse = alpha * top + np.log(np.sum(np.exp(alpha * (logs - top))))
    return float(lse / (1.0 - alpha))


def renyi_curve(omega, alphas) -> np.ndarray:
    return np.array([renyi_entropy(omega, a) for a in alphas])


@dataclass
class RenyiGrid:
    alpha: np.ndarray
    S: np.ndarray
    backend: str = "exact-diag"


def renyi_grid(omega, alphas=None, backend: str = "exact-diag") -> RenyiGrid:
    alphas = default_alpha_grid() if alphas is None else np.asarray(alphas, dtype=float)
    return RenyiGrid(alpha=alphas, S=renyi_curve(omega, alphas), backend=backend)


def _dead_sign(diff: np.ndarray, dead_zone: float) -> np.ndarray:
    s = np.sign(diff).astype(int)
    s[np.abs(diff) < dead_zone] = 0
    return s


@dataclass
class ConvertibilityMap:
    g: np.ndarray
    alpha: np.ndarray
    sign: np.ndarray  # shape (len(g), len(alpha))
    dead_zone: float = DLC_DEAD_ZONE


def dlc_column(S_here, S_next, dead_zone: float = DLC_DEAD_ZONE) -> np.ndarray:
    """Signs of ``S_alpha(g + eps) - S_alpha(g)`` with the dead zone mapped to 0."""
    S_here, S_next = np.asarray(S_here, float), np.asarray(S_next, float)
    if S_here.shape != S_next.shape:
        raise ValueError("mismatched alpha grids")
    return _dead_sign(S_next - S_here, dead_zone)


def dlc_map(g, pairs, alphas=None, dead_zone: float = DLC_DEAD_ZONE) -> ConvertibilityMap:
    """Sign map of the forward-difference entropy change along a sweep.

    ``pairs[i]`` holds the spectra at ``g[i]`` and ``g[i] + eps``; either
    probability vectors or precomputed entropy curves on ``alphas`` (flagged by
    passing :class:`RenyiGrid` objects).
    """
    alphas = default_alpha_grid() if alphas is None else np.asarray(alphas, dtype=float)
    g = np.asarray(g, dtype=float)
    if len(g) != len(pairs):
        raise ValueError("mismatched grids: one spectrum pair per sweep point")
    rows = []
    for here, nxt in pairs:
        a = here.S if isinstance(here, RenyiGrid) else renyi_curve(here, alphas)
        b = nxt.S if isinstance(nxt, RenyiGrid) else renyi_curve(nxt, alphas)
        if len(a) != len(alphas) or len(b) != len(alphas):
            raise ValueError("mismatched alpha grids")
        rows.append(dlc_column(a, b, dead_zone))
    sign = np.array(rows, dtype=int).reshape(len(g), len(alphas))
    return ConvertibilityMap(g=g, alpha=alphas, sign=sign, dead_zone=dead_zone)


def pad_spectra(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Sort both non-increasing and zero-pad to a common length."""
    a = np.sort(np.asarray(a, float))[::-1]
    b = np.sort(np.asarray(b, float))[::-1]
    n = max(len(a), len(b))
    return np.pad(a, (0, n - len(a))), np.pad(b, (0, n - len(b)))


def majorization_column(omega_here, omega_next,
                        dead_zone: float = MAJORIZATION_DEAD_ZONE) -> np.ndarray:
    """Signs of the cumulative-sum difference for k = 0..K-1; the last entry is 0."""
    a, b = pad_spectra(omega_here, omega_next)
    diff = np.cumsum(b) - np.cumsum(a)
    s = _dead_sign(diff, dead_zone)
    s[-1] = 0
    return s


@dataclass
class MajorizationMap:
    g: np.ndarray
    k: np.ndarray
    sign: np.ndarray  # shape (len(g), len(k)), zero padded to common k range
    dead_zone: float = MAJORIZATION_DEAD_ZONE


def majorization_map(g, pairs, dead_zone: float = MAJORIZATION_DEAD_ZONE) -> MajorizationMap:
    cols = [majorization_column(a, b, dead_zone) for a, b in pairs]
    K = max((len(c) for c in cols), default=0)
    sign = np.zeros((len(cols), K), dtype=int)
    for i, c in enumerate(cols):
        sign[i, : len(c)] = c
    return MajorizationMap(g=np.asarray(g, float), k=np.arange(K), sign=sign, dead_zone=dead_zone)


class Verdict(enum.Enum):
    CONVERTIBLE_UP = "convertible-up"
    CONVERTIBLE_DOWN = "convertible-down"
    CATALYST_UP = "catalyst-up"
    CATALYST_DOWN = "catalyst-down"
    NOT_CONVERTIBLE = "not-locally-convertible"


@dataclass
class VerdictReport:
    """Outcome at one sweep point.

    ``up``/``down`` follow the sign of the Renyi-entropy change along the sweep.
    """

    verdict: Verdict
    dlc_positive: int
    dlc_negative: int
    maj_positive: int
    maj_negative: int
    degenerate: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def catalyst_free(self) -> bool:
        return self.verdict in (Verdict.CONVERTIBLE_UP, Verdict.CONVERTIBLE_DOWN)


def catalyst_verdict(dlc_col, maj_col) -> VerdictReport:
    dlc_col, maj_col = np.asarray(dlc_col), np.asarray(maj_col)
    dp, dn = int(np.sum(dlc_col > 0)), int(np.sum(dlc_col < 0))
    mp, mn = int(np.sum(maj_col > 0)), int(np.sum(maj_col < 0))
    if dp and dn:
        return VerdictReport(Verdict.NOT_CONVERTIBLE, dp, dn, mp, mn)
    up = dn == 0
    degenerate = dp == 0 and dn == 0
    notes = ["all DLC cells in the dead zone"] if degenerate else []
    if mp and mn:
        v = Verdict.CATALYST_UP if up else Verdict.CATALYST_DOWN
    else:
        v = Verdict.CONVERTIBLE_UP if up else Verdict.CONVERTIBLE_DOWN
    return VerdictReport(v, dp, dn, mp, mn, degenerate=degenerate, notes=notes)


def purity_W(omega) -> float:
    """``W = 4 sum omega^2`` (equal to ``4 exp(-S_2)``)."""
    w = _prepare(omega)
    return float(4.0 * np.sum(w * w))


def schmidt_gap(omega, floor: float = RANK_FLOOR) -> float:
    """``omega_0 - omega_1``."""
    w = _prepare(omega)
    if np.count_nonzero(w > floor) < 2:
        raise ValueError("Schmidt gap needs at least two eigenvalues above the floor")
    return float(w[0] - w[1])
