"""Pseudo-critical points from finite-size sweeps and power-law extrapolation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .chain import DEFAULT_EPSILON


class ScalingError(ValueError):
    pass


class BoundaryExtremumError(ScalingError):
    """The extremum sits on the edge of the sampled range."""


class NoSignChangeError(ScalingError):
    pass


class FitError(ScalingError):
    pass


@dataclass
class SweepCurve:
    """Observable sampled along one parameter axis.

    ``meta`` carries the fixed parameters (N, L_A, the held coupling, backend).
    """

    g: np.ndarray
    values: np.ndarray
    observable: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.g.shape != self.values.shape or self.g.ndim != 1:
            raise ScalingError("g and values must be 1-d arrays of equal length")
        if len(self.g) > 1 and np.any(np.diff(self.g) <= 0):
            raise ScalingError("sweep parameter must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ScalingError("observable contains non-finite values")


def energy_curvature(e_minus: float, e0: float, e_plus: float,
                     epsilon: float = DEFAULT_EPSILON) -> float:
    """``chi = -(e(g - eps) - 2 e(g) + e(g + eps)) / eps**2``."""
    if not epsilon > 0:
        raise ScalingError("epsilon must be positive")
    return -(e_minus - 2.0 * e0 + e_plus) / epsilon**2


def curvature_from_samples(g_samples: Sequence[float], e_samples: Sequence[float]) -> float:
    """Central second difference from three samples; rejects uneven steps."""
    g = np.asarray(g_samples, dtype=float)
    e = np.asarray(e_samples, dtype=float)
    if g.shape != (3,) or e.shape != (3,):
        raise ScalingError("need exactly three samples")
    h1, h2 = g[1] - g[0], g[2] - g[1]
    if h1 <= 0 or abs(h1 - h2) > 1e-9 * max(abs(h1), 1.0):
        raise ScalingError(f"non-uniform spacing: {h1!r} vs {h2!r}")
    return energy_curvature(e[0], e[1], e[2], h1)


def curvature_curve(e_of_g: Callable[[float], float], g,
                    epsilon: float = DEFAULT_EPSILON, meta: dict | None = None) -> SweepCurve:
    """chi on a grid, evaluating ``e_of_g`` at ``g`` and ``g +- epsilon``."""
    g = np.asarray(g, dtype=float)
    chi = [energy_curvature(e_of_g(x - epsilon), e_of_g(x), e_of_g(x + epsilon), epsilon)
           for x in g]
    return SweepCurve(g, np.array(chi), observable="chi", meta=dict(meta or {}))


def _parabolic_vertex(x: np.ndarray, y: np.ndarray) -> float:
    """Vertex of the parabola through three (possibly unevenly spaced) points."""
    a, b, _ = np.polyfit(x - x[1], y, 2)
    if a == 0:
        return float(x[1])
    return float(x[1] - b / (2 * a))


def argmax_refined(curve: SweepCurve) -> float:
    """Grid argmax refined by a three-point parabola; boundary maxima are errors."""
    if len(curve.g) < 3:
        raise ScalingError("need at least three samples")
    i = int(np.argmax(curve.values))
    if i == 0 or i == len(curve.g) - 1:
        raise BoundaryExtremumError(
            f"maximum of {curve.observable or 'observable'} at the sweep boundary "
            f"g={curve.g[i]:g}; extend the sweep range")
    sl = slice(i - 1, i + 2)
    x = _parabolic_vertex(curve.g[sl], curve.values[sl])
    # a flat triple can push the vertex out of the bracket; fall back to the grid point
    if not curve.g[i - 1] <= x <= curve.g[i + 1]:
        return float(curve.g[i])
    return x


def pseudo_critical_S2(curve: SweepCurve) -> float:
    """Location of the maximum of S_2 along the sweep."""
    return argmax_refined(curve)


def pseudo_critical_Sinf(curve: SweepCurve, window: tuple[float, float] | None = None,
                         tol: float = 1e-12) -> float:
    """Zero of the discrete derivative of the lowest entanglement energy.

    Forward differences are attributed to interval midpoints; the first sign
    change (optionally restricted to ``window``) is located by linear
    interpolation.
    """
    g, y = curve.g, curve.values
    if len(g) < 3:
        raise ScalingError("need at least three samples")
    d = np.diff(y) / np.diff(g)
    mid = 0.5 * (g[1:] + g[:-1])
    s = np.sign(d)
    s[np.abs(d) <= tol] = 0
    for k in range(len(d) - 1):
        if window is not None and not window[0] <= mid[k] <= window[1]:
            continue
        if s[k] == 0 and 0 < k and s[k - 1] * s[k + 1] < 0:
            return float(mid[k])
        if s[k] * s[k + 1] < 0:
            t = d[k] / (d[k] - d[k + 1])
            return float(mid[k] + t * (mid[k + 1] - mid[k]))
    raise NoSignChangeError(
        f"no sign change of d{curve.observable or 'xi0'}/dg in the sampled range")


@dataclass
class ScalingFit:
    """``g*(N) = g_c + a N**(-theta)``.

    ``theta`` and ``inv_theta`` are both reported because the correlation-length
    exponent may correspond to either, depending on the convention.
    """

    sizes: np.ndarray
    points: np.ndarray
    g_c: float
    a: float
    theta: float
    residual: float
    g_c_stderr: float
    success: bool = True

    @property
    def inv_theta(self) -> float:
        return 1.0 / self.theta


def extrapolate(sizes, points, *, theta0: float = 1.0) -> ScalingFit:
    """Nonlinear least-squares fit of pseudo-critical points to a power-law shift."""
    N = np.asarray(sizes, dtype=float)
    y = np.asarray(points, dtype=float)
    if N.shape != y.shape or N.ndim != 1:
        raise ScalingError("sizes and points must be 1-d arrays of equal length")
    if len(N) < 3:
        raise ScalingError("extrapolation needs at least three sizes")
    if not np.all(np.isfinite(y)):
        raise ScalingError("non-finite pseudo-critical point")
    order = np.argsort(N)
    N, y = N[order], y[order]

    g0 = y[-1]
    span = N[-2] ** -theta0 - N[-1] ** -theta0
    a0 = (y[-2] - y[-1]) / span if span != 0 else 0.0

    def resid(p):
        return p[0] + p[1] * N ** (-p[2]) - y

    sol = least_squares(resid, [g0, a0, theta0],
                        bounds=([-np.inf, -np.inf, 1e-8], [np.inf, np.inf, 50.0]),
                        x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    if not sol.success or not np.all(np.isfinite(sol.x)):
        raise FitError(f"power-law fit did not converge: {sol.message}")
    g_c, a, theta = (float(v) for v in sol.x)
    res = float(np.linalg.norm(sol.fun))
    dof = len(N) - 3
    stderr = np.nan
    if dof > 0:
        J = sol.jac
        try:
            cov = np.linalg.inv(J.T @ J) * (res**2 / dof)
            stderr = float(np.sqrt(max(cov[0, 0], 0.0)))
        except np.linalg.LinAlgError:
            pass
    return ScalingFit(sizes=N, points=y, g_c=g_c, a=a, theta=theta, residual=res,
                      g_c_stderr=stderr, success=True)


def curvature_peak(e_of_g: Callable[[float], float], coarse, fine_step: float,
                   epsilon: float = DEFAULT_EPSILON, meta: dict | None = None
                   ) -> tuple[float, float, SweepCurve]:
    """Location and height of the chi maximum, coarse scan then local refinement.

    The interior maximum of chi on ``coarse`` is bracketed by its neighbours
    and resampled with ``fine_step``; the refined location comes from the
    three-point parabola on the fine grid. Energies are memoized, so shared
    abscissae are evaluated once.
    """
    memo: dict[float, float] = {}

    def e(x):
        k = round(float(x), 12)
        if k not in memo:
            memo[k] = e_of_g(k)
        return memo[k]

    coarse_curve = curvature_curve(e, coarse, epsilon, meta)
    g0 = argmax_refined(coarse_curve)
    i = int(np.argmax(coarse_curve.values))
    lo, hi = coarse_curve.g[i - 1], coarse_curve.g[i + 1]
    n = int(round((hi - lo) / fine_step))
    fine = lo + fine_step * np.arange(n + 1)
    fine_curve = curvature_curve(e, fine, epsilon, meta)
    try:
        g_star = argmax_refined(fine_curve)
    except BoundaryExtremumError:
        g_star = g0
    return g_star, float(np.max(fine_curve.values)), fine_curve
