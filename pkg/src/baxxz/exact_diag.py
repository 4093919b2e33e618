"""Exact diagonalization in the Sz_total = 0 sector.

Ground states come from :func:`baxxz.lanczos.lanczos_lowest`. The reduced
density matrix of block A is kept in Schmidt form: for every block
magnetization the wavefunction amplitudes are arranged as a matrix
``Psi[b, a]`` (environment configuration by block configuration), so
``rho_A = Psi.T @ Psi`` block by block and the entanglement spectrum is the
squared singular values. Small eigenvalues obtained this way keep their
relative accuracy, which matters for the small-alpha Renyi entropies.
"""

from __future__ import annotations

import logging
import warnings
from functools import lru_cache
from math import comb
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .chain import ChainSpec, BasisIndex, reverse_bits, sector_basis, _popcount
from .lanczos import DEFAULT_SEED, LanczosError, lanczos_lowest

log = logging.getLogger(__name__)

DEFAULT_N_CAP = 20
DEFAULT_MEMORY_BUDGET = 2 * 1024**3  # bytes
EIGENVALUE_FLOOR = 1e-13
CLUSTER_RTOL = 1e-10
COMMUTATOR_TOL = 1e-9
QUASI_DEGENERATE_GAP = 1e-8
RESIDUAL_CONTRACT = 1e-10


class MemoryBudgetError(MemoryError):
    pass


class GeometryError(RuntimeError):
    """Block inversion does not commute with rho_A."""


class QuasiDegenerateWarning(UserWarning):
    pass


@lru_cache(maxsize=4)
def _bond_operators(N: int, Sz: float):
    """Flip-flop matrices and sigma^z sigma^z diagonals summed over odd/even bonds.

    Bond n (one-based) has strength 1 - delta for odd n and 1 + delta for
    even n, so ``H = sum_parity J_parity (F_parity + Delta Z_parity)``.
    """
    basis = sector_basis(N, Sz)
    states = basis.states
    dim = len(basis)
    flips = {0: ([], []), 1: ([], [])}
    zz = {0: np.zeros(dim), 1: np.zeros(dim)}
    for n0 in range(N):
        i, j = n0, (n0 + 1) % N
        parity = (n0 + 1) % 2  # 1 for odd one-based bonds
        anti = ((states >> i) & 1) != ((states >> j) & 1)
        zz[parity] += np.where(anti, -1.0, 1.0)
        src = np.nonzero(anti)[0]
        dst = basis.index_of(states[src] ^ ((1 << i) | (1 << j)))
        flips[parity][0].append(dst)
        flips[parity][1].append(src)
    F = {}
    for parity, (rows, cols) in flips.items():
        r, c = np.concatenate(rows), np.concatenate(cols)
        F[parity] = sp.csr_matrix((np.full(len(r), 2.0), (r, c)), shape=(dim, dim))
    return basis, F[1], F[0], zz[1], zz[0]


def build_hamiltonian(spec: ChainSpec, Sz: float = 0.0,
                      memory_budget: int = DEFAULT_MEMORY_BUDGET) -> sp.csr_matrix:
    """Sparse H restricted to one Sz sector, rows ordered as ``sector_basis(N, Sz)``.

    ``sigma^x sigma^x + sigma^y sigma^y`` acts as a flip-flop with amplitude
    ``2 J_n`` and ``sigma^z sigma^z`` contributes ``+-Delta J_n`` on the diagonal.
    """
    dim = comb(spec.N, spec.N // 2 + int(round(Sz))) if abs(Sz) <= spec.N / 2 else 0
    # diagonal + up to N off-diagonal entries per row, CSR with int32/float64,
    # held twice while the bond components are combined
    estimate = 2 * dim * (spec.N + 1) * 12
    if estimate > memory_budget:
        raise MemoryBudgetError(
            f"sector dimension {dim} needs ~{estimate / 2**20:.0f} MiB > budget")
    _, F_odd, F_even, Z_odd, Z_even = _bond_operators(spec.N, float(Sz))
    J_odd, J_even = 1.0 - spec.delta, 1.0 + spec.delta
    diag = spec.Delta * (J_odd * Z_odd + J_even * Z_even)
    H = J_odd * F_odd + J_even * F_even + sp.diags(diag, format="csr")
    return H.tocsr()


@dataclass
class GroundState:
    spec: ChainSpec
    energy: float
    vector: np.ndarray
    basis: BasisIndex
    gap: float
    residual: float
    quasi_degenerate: bool = False
    matvecs: int = 0

    @property
    def energy_per_site(self) -> float:
        return self.energy / self.spec.N


def ground_state(spec: ChainSpec, *, seed: int = DEFAULT_SEED, tol: float = 1e-12,
                 max_iter: int = 2000, n_cap: int = DEFAULT_N_CAP,
                 memory_budget: int = DEFAULT_MEMORY_BUDGET) -> GroundState:
    """Lowest state of the Sz_total = 0 sector.

    ``tol`` bounds the residual ``||H psi - E psi||``; the default sits below
    the 1e-10 contract because Schmidt values near 1e-13 are only as accurate
    as the ground-state vector. Near a quasi-degeneracy Lanczos can stall
    between the two; a stalled result is accepted if it meets the contract.
    """
    if spec.N > n_cap:
        raise ValueError(f"N={spec.N} exceeds the exact-diagonalization cap {n_cap}")
    H = build_hamiltonian(spec, memory_budget=memory_budget)
    basis = _bond_operators(spec.N, 0.0)[0]
    try:
        res = lanczos_lowest(H.dot, H.shape[0], seed=seed, tol=tol, max_iter=max_iter)
    except LanczosError as exc:
        if exc.result is None or exc.result.residual > max(tol, RESIDUAL_CONTRACT):
            raise
        log.warning("accepting residual %.2e after %d products for %s",
                    exc.result.residual, exc.result.matvecs, spec)
        res = exc.result
    psi = res.vector
    # fix the global sign so outputs are reproducible
    k = int(np.argmax(np.abs(psi)))
    if psi[k] < 0:
        psi = -psi
    gap = res.second_value - res.value
    quasi = bool(gap < QUASI_DEGENERATE_GAP)
    if quasi:
        warnings.warn(f"quasi-degenerate ground state (gap {gap:.2e}) for {spec}",
                      QuasiDegenerateWarning, stacklevel=2)
    return GroundState(spec=spec, energy=res.value, vector=psi, basis=basis, gap=gap,
                       residual=res.residual, quasi_degenerate=quasi, matvecs=res.matvecs)


@dataclass
class SchmidtBlock:
    """Amplitudes with fixed block magnetization: ``Psi[b, a]``."""

    n_up: int
    a_configs: np.ndarray
    psi: np.ndarray


@dataclass
class ReducedDensityMatrix:
    """rho_A of a pure state, stored through its Schmidt blocks."""

    L_A: int
    blocks: list[SchmidtBlock]
    _dense: np.ndarray | None = field(default=None, repr=False)

    @property
    def matrix(self) -> np.ndarray:
        """Dense ``2**L_A`` matrix indexed by block configuration (bit i = site i+1)."""
        if self._dense is None:
            d = 1 << self.L_A
            rho = np.zeros((d, d))
            for blk in self.blocks:
                ix = np.ix_(blk.a_configs, blk.a_configs)
                rho[ix] = blk.psi.T @ blk.psi
            self._dense = rho
        return self._dense

    def eigenvalues(self) -> np.ndarray:
        """All ``2**L_A`` eigenvalues in non-increasing order (zeros included)."""
        vals = [np.linalg.svd(b.psi, compute_uv=False) ** 2 for b in self.blocks]
        out = np.zeros(1 << self.L_A)
        flat = np.sort(np.concatenate(vals))[::-1] if vals else np.zeros(0)
        out[: len(flat)] = flat
        return out


def reduced_density_matrix(gs: GroundState, L_A: int | None = None) -> ReducedDensityMatrix:
    """Reduced state of sites 1..L_A of the ground state."""
    spec = gs.spec
    L = spec.L_A if L_A is None else L_A
    if L < 1 or L > spec.N // 2 and not spec.allow_large_block:
        raise ValueError(f"L_A={L} outside [1, N/2] for N={spec.N}")
    if (1 << L) ** 2 * 8 > DEFAULT_MEMORY_BUDGET:
        raise MemoryBudgetError(f"rho_A of {L} sites exceeds the memory budget")
    states = gs.basis.states
    a = states & ((1 << L) - 1)
    b = states >> L
    na = _popcount(a)
    blocks = []
    for n in range(L + 1):
        sel = na == n
        if not np.any(sel):
            continue
        a_sel, b_sel = a[sel], b[sel]
        a_cfg, a_idx = np.unique(a_sel, return_inverse=True)
        b_cfg, b_idx = np.unique(b_sel, return_inverse=True)
        psi = np.zeros((len(b_cfg), len(a_cfg)))
        psi[b_idx, a_idx] = gs.vector[sel]
        blocks.append(SchmidtBlock(n_up=n, a_configs=a_cfg, psi=psi))
    return ReducedDensityMatrix(L_A=L, blocks=blocks)


@dataclass
class EntanglementSpectrum:
    """Eigenvalues of rho_A above the floor with their quantum numbers.

    ``omega`` is non-increasing, ``xi = -ln(omega)``; ``Sz_A`` and ``p_A``
    label each level. ``clusters`` lists index ranges of degenerate levels.
    """

    omega: np.ndarray
    Sz_A: np.ndarray
    p_A: np.ndarray
    clusters: list[tuple[int, int]]
    floor: float = EIGENVALUE_FLOOR
    backend: str = "exact-diag"

    @property
    def xi(self) -> np.ndarray:
        return -np.log(self.omega)

    @property
    def probabilities(self) -> np.ndarray:
        """``omega`` renormalized to unit sum (the floor drops a tiny tail)."""
        return self.omega / self.omega.sum()

    def __len__(self) -> int:
        return len(self.omega)


def _clusters(values: np.ndarray, rtol: float) -> list[tuple[int, int]]:
    """Index ranges [start, stop) of runs whose neighbours agree within rtol (values sorted)."""
    out = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or abs(values[i] - values[i - 1]) > rtol * max(abs(values[i - 1]), 1e-300):
            out.append((start, i))
            start = i
    return out


def _sorted_spectrum(omega, Sz, p, floor, rtol, backend):
    # labels ordered inside each cluster, so round-off never reorders degenerate levels
    order = np.argsort(-omega, kind="stable")
    omega, Sz, p = omega[order], Sz[order], p[order]
    cluster_id = np.empty(len(omega), dtype=int)
    for c, (lo, hi) in enumerate(_clusters(omega, rtol)):
        cluster_id[lo:hi] = c
    # inside a cluster the value-label pairing is fixed only up to rtol anyway
    order = np.lexsort((-p, -Sz, cluster_id))
    Sz, p = Sz[order], p[order]
    return EntanglementSpectrum(omega=omega, Sz_A=Sz, p_A=p, clusters=_clusters(omega, rtol),
                                floor=floor, backend=backend)


def labeled_entanglement_spectrum(rdm: ReducedDensityMatrix, L_A: int | None = None, *,
                                  floor: float = EIGENVALUE_FLOOR,
                                  rtol: float = CLUSTER_RTOL) -> EntanglementSpectrum:
    """Diagonalize rho_A per Sz_A block and label levels by block-inversion parity.

    Inside each cluster of degenerate eigenvalues the eigenvectors are rotated
    into eigenvectors of the inversion; levels below ``floor`` are dropped.
    """
    L = rdm.L_A if L_A is None else L_A
    omegas, szs, ps = [], [], []
    for blk in rdm.blocks:
        _, s, vt = np.linalg.svd(blk.psi, full_matrices=False)
        w = s**2
        keep = w >= floor
        if not np.any(keep):
            continue
        w, vecs = w[keep], vt[keep].T  # columns over blk.a_configs
        # inversion restricted to this block (a permutation of a_configs)
        perm = np.searchsorted(blk.a_configs, reverse_bits(blk.a_configs, L))
        rho = blk.psi.T @ blk.psi
        comm = np.max(np.abs(rho[np.ix_(perm, perm)] - rho)) if rho.size else 0.0
        if comm > COMMUTATOR_TOL * max(1.0, np.max(np.abs(rho))):
            raise GeometryError(f"inversion does not commute with rho_A (|[P, rho]| = {comm:.2e})")
        labels = np.empty(len(w))
        for lo, hi in _clusters(w, rtol):
            U = vecs[:, lo:hi]
            Pm = U.T @ U[perm]
            Pm = 0.5 * (Pm + Pm.T)
            pe, pv = np.linalg.eigh(Pm)
            labels[lo:hi] = pe
        if np.any(np.abs(np.abs(labels) - 1.0) > 1e-6):
            raise GeometryError("levels are not inversion eigenstates")
        omegas.append(w)
        szs.append(np.full(len(w), blk.n_up - L / 2))
        ps.append(np.sign(labels).astype(int))
    return _sorted_spectrum(np.concatenate(omegas), np.concatenate(szs),
                            np.concatenate(ps), floor, rtol, "exact-diag")


def entanglement_spectrum(spec: ChainSpec, **kwargs) -> tuple[GroundState, EntanglementSpectrum]:
    """Convenience: ground state of ``spec`` and the labeled spectrum of its block A."""
    gs = ground_state(spec, **kwargs)
    return gs, labeled_entanglement_spectrum(reduced_density_matrix(gs))
