"""Physical instance of the bond-alternating spin-1/2 XXZ ring.

Sites are numbered 1..N in the physics formulas and map to bit ``i - 1`` of an
integer configuration (bit set = spin up). Bond ``n`` joins sites ``n`` and
``n + 1`` (site ``N + 1`` is site 1) with strength ``1 + (-1)**n * delta``, so
the unit cell ``(2n - 1, 2n)`` carries the intra-cell coupling ``1 - delta``.
Block A is always sites ``1..L_A``; with ``L_A`` even both of its cuts fall on
``1 + delta`` bonds.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

DEFAULT_EPSILON = 5e-3


class ChainSpecError(ValueError):
    """Raised for an inconsistent chain instance."""


@dataclass(frozen=True)
class ChainSpec:
    """Bond-alternating XXZ ring with a contiguous bipartition.

    Parameters
    ----------
    N : int
        Number of sites (even, >= 4).
    delta : float
        Bond alternation in (-1, 1].
    Delta : float
        Ising anisotropy.
    L_A : int
        Block length, even, ``2 <= L_A <= N/2`` unless ``allow_large_block``.
    epsilon : float
        Finite-difference step used by parameter sweeps.
    """

    N: int
    delta: float
    Delta: float
    L_A: int = 2
    epsilon: float = DEFAULT_EPSILON
    allow_large_block: bool = False

    def __post_init__(self):
        if self.N < 4 or self.N % 2:
            raise ChainSpecError(f"N must be even and >= 4, got {self.N}")
        if not -1.0 < self.delta <= 1.0:
            raise ChainSpecError(f"delta must lie in (-1, 1], got {self.delta}")
        if self.L_A < 2 or self.L_A % 2:
            raise ChainSpecError(f"L_A must be even and >= 2, got {self.L_A}")
        limit = self.N if self.allow_large_block else self.N // 2
        if self.L_A > limit:
            raise ChainSpecError(f"L_A={self.L_A} exceeds {limit} for N={self.N}")
        if not self.epsilon > 0:
            raise ChainSpecError("epsilon must be positive")

    @property
    def M(self) -> int:
        """Number of unit cells."""
        return self.N // 2

    def with_params(self, **changes) -> "ChainSpec":
        fields = dict(N=self.N, delta=self.delta, Delta=self.Delta, L_A=self.L_A,
                      epsilon=self.epsilon, allow_large_block=self.allow_large_block)
        fields.update(changes)
        return ChainSpec(**fields)


def bond_strengths(spec: ChainSpec) -> np.ndarray:
    """Couplings ``1 + (-1)**n * delta`` for bonds n = 1..N (bond N closes the ring)."""
    n = np.arange(1, spec.N + 1)
    return 1.0 + np.where(n % 2 == 0, 1.0, -1.0) * spec.delta


def bonds(spec: ChainSpec) -> list[tuple[int, int, float]]:
    """Bonds as ``(bit_i, bit_j, strength)`` with zero-based bit positions."""
    J = bond_strengths(spec)
    return [(n, (n + 1) % spec.N, float(J[n])) for n in range(spec.N)]


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x.astype(np.uint64)).astype(np.int64)


@dataclass(frozen=True)
class BasisIndex:
    """Configurations of fixed total magnetization, sorted by bitmask value."""

    N: int
    Sz: float
    states: np.ndarray

    def __len__(self) -> int:
        return len(self.states)

    def index_of(self, configs) -> np.ndarray:
        """Sector ordinals of the given configurations (must belong to the sector)."""
        configs = np.asarray(configs, dtype=np.int64)
        idx = np.searchsorted(self.states, configs)
        idx_c = np.minimum(idx, len(self.states) - 1)
        if np.any(self.states[idx_c] != configs):
            raise KeyError("configuration outside the sector")
        return idx

    def config(self, ordinal: int) -> int:
        return int(self.states[ordinal])


def sector_basis(N: int, Sz: float) -> BasisIndex:
    """All N-site configurations with ``N/2 + Sz`` up spins, increasing bitmask order."""
    if N % 2:
        raise ChainSpecError("N must be even")
    twice = 2 * Sz
    if abs(twice - round(twice)) > 1e-12 or abs(twice) > N:
        raise ChainSpecError(f"Sz={Sz} out of range for N={N}")
    n_up = N // 2 + int(round(Sz))
    if (N // 2 + Sz) != n_up:
        # half-integer Sz with even N has no configurations
        raise ChainSpecError(f"Sz={Sz} incompatible with even N={N}")
    if N <= 24:
        allconf = np.arange(1 << N, dtype=np.int64)
        states = allconf[_popcount(allconf) == n_up]
    else:
        raise ChainSpecError("sector enumeration limited to N <= 24")
    assert len(states) == comb(N, n_up)
    return BasisIndex(N=N, Sz=float(Sz), states=states)


def block_inversion_permutation(L_A: int) -> tuple[int, ...]:
    """One-based image of each block site under inversion: i -> L_A + 1 - i."""
    if L_A < 2:
        raise ChainSpecError("L_A must be >= 2")
    return tuple(L_A + 1 - i for i in range(1, L_A + 1))


def reverse_bits(configs, L: int) -> np.ndarray:
    """Apply block inversion to L-bit configurations (bit i <-> bit L-1-i)."""
    configs = np.asarray(configs, dtype=np.int64)
    out = np.zeros_like(configs)
    for i in range(L):
        out |= ((configs >> i) & 1) << (L - 1 - i)
    return out
