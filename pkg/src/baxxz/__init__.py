"""Entanglement and convertibility toolkit for the bond-alternating XXZ ring."""

__version__ = "0.1.0"

from .chain import ChainSpec, ChainSpecError, sector_basis  # noqa: E402
from .exact_diag import ground_state, entanglement_spectrum, reduced_density_matrix  # noqa: E402
from .free_fermion import correlation_matrix, free_fermion_spectrum  # noqa: E402

__all__ = [
    "ChainSpec", "ChainSpecError", "sector_basis", "ground_state", "entanglement_spectrum",
    "reduced_density_matrix", "correlation_matrix", "free_fermion_spectrum",
]
