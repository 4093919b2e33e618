"""Exact backend at Delta = 0.

After Jordan-Wigner the chain is a two-band hopping problem with ``M = N/2``
unit cells. With ``M`` particles the boundary twist is periodic for odd ``M``
and antiperiodic for even ``M``; the allowed momenta are ``p_k * pi / M`` with
``p_k = 2k`` (odd M) or ``2k + 1`` (even M), k = 1..M.

In each cell the Bloch Hamiltonian is ``R(k) . sigma`` with

    R_x = 2(1 - delta) + 2(1 + delta) cos q,   R_y = 2(1 + delta) sin q,

``q = p_k pi / M``. The ground state fills the lower band, so the momentum
space correlator ``<c c^dagger>`` is ``(1 + R_hat . sigma) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exact_diag import CLUSTER_RTOL, EIGENVALUE_FLOOR, EntanglementSpectrum, _sorted_spectrum

M_EFF_DEFAULT = 4096
EDGE_THRESHOLD = 0.2


class GaplessError(ValueError):
    """Topological invariants are undefined at delta = 0."""


class NoEdgeModesError(ValueError):
    pass


def momentum_offsets(M: int) -> np.ndarray:
    """Integers ``p_k`` for k = 1..M: ``2k`` if M is odd, ``2k + 1`` if M is even."""
    if M < 1:
        raise ValueError("M must be >= 1")
    k = np.arange(1, M + 1)
    return 2 * k if M % 2 else 2 * k + 1


@dataclass(frozen=True)
class BlochData:
    M: int
    delta: float
    p: np.ndarray
    Rx: np.ndarray
    Ry: np.ndarray
    R: np.ndarray

    @property
    def Rz(self) -> np.ndarray:
        return np.zeros_like(self.Rx)

    @property
    def boundary(self) -> str:
        return "periodic" if self.M % 2 else "antiperiodic"


def bloch_data(M: int, delta: float) -> BlochData:
    p = momentum_offsets(M)
    q = p * np.pi / M
    Rx = 2 * (1 - delta) + 2 * (1 + delta) * np.cos(q)
    Ry = 2 * (1 + delta) * np.sin(q)
    return BlochData(M=M, delta=delta, p=p, Rx=Rx, Ry=Ry, R=dispersion(M, delta))


def dispersion(M: int, delta: float, k=None) -> np.ndarray:
    """Band energy ``R(k) = 4 sqrt(cos^2(p_k pi / 2M) + delta^2 sin^2(p_k pi / 2M))``.

    ``k`` (1-based, scalar or array) selects momenta; all M values by default.
    """
    p = momentum_offsets(M)
    if k is not None:
        p = p[np.asarray(k) - 1]
    half = p * np.pi / (2 * M)
    return 4.0 * np.sqrt(np.cos(half) ** 2 + delta**2 * np.sin(half) ** 2)


def ground_energy_per_site(M: int, delta: float) -> float:
    """Finite-ring energy density ``-(1/2M) sum_k R(k)`` (half filling)."""
    # np.sum uses pairwise summation: deterministic and accurate at M ~ 1e6
    return -float(np.sum(dispersion(M, delta))) / (2 * M)


def elliptic_e(m: float) -> float:
    """Complete elliptic integral of the second kind, parameter convention.

    ``E(m) = int_0^{pi/2} sqrt(1 - m sin^2 t) dt`` via the arithmetic-geometric
    mean: ``E = K (1 - sum_n 2^(n-1) c_n^2)`` with ``K = pi / (2 AGM)``.
    """
    if not 0.0 <= m <= 1.0:
        raise ValueError("m must lie in [0, 1]")
    if m == 1.0:
        return 1.0
    a, b, c = 1.0, math.sqrt(1.0 - m), math.sqrt(m)
    total = 0.5 * c * c
    power = 0.5
    while abs(c) > 1e-17 * a:
        # c_{n+1} = (a_n - b_n)/2 written without cancellation
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), c * c / (2.0 * (a + b))
        power *= 2.0
        total += power * c * c
        if power > 2.0**60:
            break
    K = math.pi / (2.0 * a)
    return K * (1.0 - total)


def ground_energy_thermo(delta: float) -> float:
    """Infinite-chain energy density ``-(4/pi) E(1 - delta^2)``.

    At delta = 0 this is ``-4/pi``.
    """
    if not -1.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [-1, 1]")
    return -4.0 / math.pi * elliptic_e(1.0 - delta * delta)


def _polar_angle_path(delta: float, grid_size: int) -> tuple[np.ndarray, np.ndarray]:
    k = 2 * np.pi * np.arange(grid_size) / grid_size
    Rx = 2 * (1 - delta) + 2 * (1 + delta) * np.cos(k)
    Ry = 2 * (1 + delta) * np.sin(k)
    return Rx, Ry


def winding_number(delta: float, grid_size: int = 1024) -> int:
    """Number of turns of ``(R_x, R_y)`` around the origin over the Brillouin zone.

    Equals ``(1 + sign(delta)) / 2``; raises at the gap closing delta = 0.
    """
    if delta == 0:
        raise GaplessError("gap closes at delta = 0; winding number undefined")
    Rx, Ry = _polar_angle_path(delta, grid_size)
    theta = np.arctan2(Ry, Rx)
    steps = np.diff(np.append(theta, theta[0]))
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    return int(round(np.sum(steps) / (2 * np.pi)))


def berry_phase(delta: float, grid_size: int = 256) -> float:
    """Berry phase of the filled band from the discrete Wilson-loop product.

    ``gamma = -arg prod_i <phi(k_i)|phi(k_{i+1})>`` over a closed k loop, with
    the lower-band eigenvector of ``R(k) . sigma`` from a numerical
    eigensolver (arbitrary phases cancel around the loop). The result is
    reduced into ``[-pi/2, 3pi/2)`` so both quantized values 0 and pi sit away
    from the branch cut.
    """
    if delta == 0:
        raise GaplessError("gap closes at delta = 0; Berry phase undefined")
    if grid_size < 64:
        raise ValueError("grid_size must be >= 64")
    Rx, Ry = _polar_angle_path(delta, grid_size)
    h = np.zeros((grid_size, 2, 2), dtype=complex)
    h[:, 0, 1] = Rx - 1j * Ry
    h[:, 1, 0] = Rx + 1j * Ry
    _, vecs = np.linalg.eigh(h)
    lower = vecs[:, :, 0]
    nxt = np.roll(lower, -1, axis=0)
    overlaps = np.sum(lower.conj() * nxt, axis=1)
    gamma = -np.sum(np.angle(overlaps))
    return float((gamma + np.pi / 2) % (2 * np.pi) - np.pi / 2)


@dataclass
class CorrelationMatrixBlock:
    """``C_{mn} = <c_m c_n^dagger>`` on block sites 1..L_A and its eigen-decomposition.

    ``modes[:, l]`` is the single-particle eigenvector with occupation-type
    eigenvalue ``q[l]`` (ascending), chosen as an eigenvector of block
    inversion; ``parity[l]`` is its inversion eigenvalue.
    """

    M: int | None
    delta: float
    L_A: int
    C: np.ndarray
    q: np.ndarray
    modes: np.ndarray
    parity: np.ndarray


def _inversion_eigenbasis(C: np.ndarray, rtol: float = 1e-10):
    """Eigen-decomposition of C with degenerate subspaces rotated to inversion eigenvectors."""
    q, U = np.linalg.eigh(C)
    L = len(C)
    par = np.empty(L)
    start = 0
    for i in range(1, L + 1):
        if i == L or abs(q[i] - q[i - 1]) > rtol:
            sub = U[:, start:i]
            Pm = sub.T @ sub[::-1]
            Pm = 0.5 * (Pm + Pm.T)
            pe, pv = np.linalg.eigh(Pm)
            U[:, start:i] = sub @ pv
            par[start:i] = pe
            start = i
    return q, U, np.sign(par).astype(int)


def correlation_matrix(M: int | None, delta: float, L_A: int, *,
                       M_eff: int = M_EFF_DEFAULT) -> CorrelationMatrixBlock:
    """Real-space correlation block for sites 1..L_A.

    ``M=None`` selects the infinite chain, evaluated as a k-sum with ``M_eff``
    cells (trapezoidal quadrature of a smooth periodic integrand).
    """
    Mk = M_eff if M is None else M
    if L_A < 2 or L_A % 2:
        # whole unit cells only: both cuts on strong bonds, inversion a symmetry
        raise ValueError(f"L_A must be an even integer >= 2, got {L_A}")
    if L_A > 2 * Mk:
        raise ValueError("L_A exceeds the chain length")
    cells = (L_A + 1) // 2
    bd = bloch_data(Mk, delta)
    q = bd.p * np.pi / Mk
    nx, ny = bd.Rx / bd.R, bd.Ry / bd.R
    d = np.arange(-(cells - 1), cells)
    phase = np.exp(1j * np.outer(d, q))  # (distance, k)
    # G(k) = 1/2 [[1, nx - i ny], [nx + i ny, 1]]
    g_ab = 0.5 * (nx - 1j * ny)
    g_ba = 0.5 * (nx + 1j * ny)
    c_aa = np.sum(phase * 0.5, axis=1) / Mk
    c_ab = np.sum(phase * g_ab, axis=1) / Mk
    c_ba = np.sum(phase * g_ba, axis=1) / Mk
    C = np.zeros((2 * cells, 2 * cells), dtype=complex)
    for m in range(cells):
        for n in range(cells):
            i = m - n + cells - 1
            C[2 * m, 2 * n] = c_aa[i]
            C[2 * m + 1, 2 * n + 1] = c_aa[i]
            C[2 * m, 2 * n + 1] = c_ab[i]
            C[2 * m + 1, 2 * n] = c_ba[i]
    C = C[:L_A, :L_A]
    if np.max(np.abs(C.imag)) > 1e-10:
        raise RuntimeError("correlation matrix unexpectedly complex")
    C = 0.5 * (C.real + C.real.T)
    qv, U, par = _inversion_eigenbasis(C)
    return CorrelationMatrixBlock(M=M, delta=delta, L_A=L_A, C=C,
                                  q=np.clip(qv, 0.0, 1.0), modes=U, parity=par)


def renyi_from_occupations(q, alpha: float, *, rank_limit: bool = False,
                           floor: float = EIGENVALUE_FLOOR) -> float:
    """Renyi entropy of a Gaussian state, ``1/(1-alpha) sum ln[q^a + (1-q)^a]``.

    ``alpha = 1`` gives the binary-entropy sum, ``alpha = inf`` gives
    ``-sum ln max(q, 1-q)``. Modes whose smaller weight is below ``floor``
    count as pure. ``rank_limit=True`` returns the alpha -> 0+ limit, ``ln 2``
    per mode above the floor.
    """
    q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
    lo = np.minimum(q, 1 - q)
    if rank_limit:
        return float(np.log(2.0) * np.count_nonzero(lo > floor))
    if not alpha > 0:
        raise ValueError("alpha must be positive (use rank_limit for alpha -> 0)")
    # round-off occupations would dominate small-alpha entropies
    lo = np.where(lo < floor, 0.0, lo)
    hi = 1 - lo
    if np.isinf(alpha):
        return float(-np.sum(np.log(hi)))
    if alpha == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(lo > 0, lo * np.log(lo), 0.0) + hi * np.log(hi)
        return float(-np.sum(t))
    # ln(hi^a + lo^a) = a ln hi + log1p((lo/hi)^a)
    with np.errstate(divide="ignore"):
        ratio = np.where(lo > 0, np.exp(alpha * (np.log(lo) - np.log(hi))), 0.0)
    terms = alpha * np.log(hi) + np.log1p(ratio)
    return float(np.sum(terms) / (1 - alpha))


def occupation_products(q) -> np.ndarray:
    """All ``2**L`` many-body eigenvalues ``prod_l [q_l or 1 - q_l]``, non-increasing."""
    out = np.ones(1)
    for ql in np.asarray(q, dtype=float):
        out = np.concatenate([out * ql, out * (1 - ql)])
    return np.sort(out)[::-1]


def spectrum_from_block(block: CorrelationMatrixBlock, *, floor: float = EIGENVALUE_FLOOR,
                        max_levels: int | None = 65536,
                        rtol: float = CLUSTER_RTOL) -> EntanglementSpectrum:
    """Labeled many-body spectrum of the Gaussian rho_A, largest levels first.

    Levels are generated best-first (smallest entanglement energy first) and
    stop at ``floor`` or ``max_levels``. A level with occupied-mode set S has
    weight ``prod_{l in S}(1 - q_l) prod_{l not in S} q_l``, ``S_A^z = |S| -
    L_A/2`` and inversion parity ``(-1)^{|S|(|S|-1)/2} prod_{l in S} s_l``,
    the first factor coming from the Jordan-Wigner string.
    """
    import heapq

    q = block.q
    occ = 1.0 - q  # probability that mode l is occupied
    with np.errstate(divide="ignore"):
        l_occ, l_emp = np.log(occ), np.log(q)
    base_occ = l_occ >= l_emp  # preferred (larger-weight) choice per mode
    best = np.where(base_occ, l_occ, l_emp)
    worst = np.where(base_occ, l_emp, l_occ)
    cost = best - worst  # >= 0, may be inf
    order = np.argsort(cost, kind="stable")
    cost_sorted = cost[order]
    log_top = float(np.sum(best))
    log_floor = math.log(floor) if floor > 0 else -math.inf

    L = len(q)
    flips_list: list[tuple[int, ...]] = [()]
    weights = [log_top]
    heap: list[tuple[float, tuple[int, ...]]] = []
    if L:
        heapq.heappush(heap, (cost_sorted[0], (0,)))
    limit = math.inf if max_levels is None else max_levels
    while heap and len(weights) < limit:
        c, flips = heapq.heappop(heap)
        lw = log_top - c
        if lw < log_floor or not np.isfinite(lw):
            break
        flips_list.append(flips)
        weights.append(lw)
        last = flips[-1]
        if last + 1 < L:
            heapq.heappush(heap, (c + cost_sorted[last + 1], flips + (last + 1,)))
            heapq.heappush(heap, (c - cost_sorted[last] + cost_sorted[last + 1],
                                  flips[:-1] + (last + 1,)))
    omega = np.exp(np.array(weights))
    Sz = np.empty(len(omega))
    par = np.empty(len(omega), dtype=int)
    for i, flips in enumerate(flips_list):
        occupied = base_occ.copy()
        idx = order[list(flips)]
        occupied[idx] = ~occupied[idx]
        n = int(np.count_nonzero(occupied))
        Sz[i] = n - L / 2
        sign = -1 if (n * (n - 1) // 2) % 2 else 1
        par[i] = sign * int(np.prod(block.parity[occupied]))
    return _sorted_spectrum(omega, Sz, par, floor, rtol, "free-fermion")


@dataclass
class EdgeModeReport:
    lam: float
    q1: float
    q2: float
    epsilon1: float
    epsilon2: float
    left: np.ndarray
    right: np.ndarray
    factorization_error: float
    normalization: float  # Z_1 of the edge factor


def edge_mode_report(block: CorrelationMatrixBlock, n_levels: int = 16,
                     threshold: float = EDGE_THRESHOLD) -> EdgeModeReport:
    """Edge-mode content of a block whose cuts lie on strong bonds.

    The two occupations nearest 1/2 define ``q1 >= q2``, ``lambda = q1 - 1/2``
    and ``epsilon1 = ln(q1 / (1 - q1))``. Left and right edge wavefunctions are
    ``(u1 + u2)/sqrt2`` and ``(u2 - u1)/sqrt2`` with signs fixed so the left one
    lives on the left half. The factorization error compares the product
    form ``diag(1/2 - lambda, 1/2 + lambda) x rho_0 x diag(1/2 + lambda, 1/2 -
    lambda)`` with the exact largest ``n_levels`` eigenvalues.
    """
    q = block.q
    dist = np.abs(q - 0.5)
    cand = np.argsort(dist, kind="stable")[:2]
    if len(q) < 2 or np.any(dist[cand] >= threshold):
        raise NoEdgeModesError("no edge modes: fewer than two occupations near 1/2")
    i1, i2 = sorted(cand, key=lambda i: -q[i])
    q1, q2 = float(q[i1]), float(q[i2])
    lam = q1 - 0.5
    eps1 = math.log(q1 / (1 - q1))
    eps2 = math.log(q2 / (1 - q2))

    u1, u2 = block.modes[:, i1].copy(), block.modes[:, i2].copy()
    half = block.L_A // 2
    left = (u1 + u2) / math.sqrt(2)
    if np.sum(left[:half] ** 2) < 0.5:
        u1 = -u1
        left = (u1 + u2) / math.sqrt(2)
    right = (u2 - u1) / math.sqrt(2)

    bulk = np.delete(q, [i1, i2])
    rho0 = occupation_products(bulk) if len(bulk) <= 20 else _top_products(bulk, n_levels)
    edge = np.array([(0.5 - lam) * (0.5 + lam), (0.5 - lam) ** 2,
                     (0.5 + lam) ** 2, (0.5 + lam) * (0.5 - lam)])
    recon = np.sort(np.outer(edge, rho0).ravel())[::-1][:n_levels]
    exact = spectrum_from_block(block, floor=0.0, max_levels=n_levels).omega[:n_levels]
    err = float(np.max(np.abs(recon[: len(exact)] - exact)))
    Z1 = 2.0 + math.exp(-eps1) + math.exp(eps1)
    return EdgeModeReport(lam=lam, q1=q1, q2=q2, epsilon1=eps1, epsilon2=eps2, left=left,
                          right=right, factorization_error=err, normalization=Z1)


def _top_products(q, n: int) -> np.ndarray:
    block = CorrelationMatrixBlock(M=None, delta=float("nan"), L_A=len(q), C=np.diag(q),
                                   q=np.asarray(q), modes=np.eye(len(q)),
                                   parity=np.ones(len(q), dtype=int))
    return spectrum_from_block(block, floor=0.0, max_levels=n).omega


def free_fermion_spectrum(M: int | None, delta: float, L_A: int, **kwargs) -> EntanglementSpectrum:
    return spectrum_from_block(correlation_matrix(M, delta, L_A), **kwargs)
