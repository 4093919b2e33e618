"""Thick-restart Lanczos for the lowest eigenpair of a real symmetric operator."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

DEFAULT_SEED = 0


class LanczosError(RuntimeError):
    """Raised after ``max_iter`` products; ``result`` holds the last Ritz pair."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class LanczosResult:
    value: float
    vector: np.ndarray
    residual: float
    second_value: float
    second_residual: float
    matvecs: int


def lanczos_lowest(matvec, dim: int, *, seed: int = DEFAULT_SEED, v0=None,
                   tol: float = 1e-10, max_iter: int = 2000, krylov_dim: int = 48,
                   keep: int = 6) -> LanczosResult:
    """Lowest eigenpair by Lanczos with full reorthogonalization and thick restarts.

    The projected matrix is accumulated column by column from ``V.T @ (H v)``,
    so restarted bases (kept Ritz vectors plus the residual direction) need no
    special bookkeeping. Convergence is declared on the explicitly recomputed
    residual ``||H x - theta x||``.

    Parameters
    ----------
    matvec : callable
        ``matvec(x) -> H @ x``.
    dim : int
        Dimension of the space.
    seed : int
        Seed of the random start vector (ignored when ``v0`` is given).
    tol : float
        Target residual norm of the lowest Ritz pair.
    max_iter : int
        Maximum number of matrix-vector products.
    krylov_dim : int
        Basis size before a restart.
    keep : int
        Number of lowest Ritz vectors kept across a restart.
    """
    if dim == 1:
        x = np.ones(1)
        theta = float(matvec(x)[0])
        return LanczosResult(theta, x, 0.0, np.inf, 0.0, 1)

    m = min(krylov_dim, dim)
    keep = min(keep, m - 2) if m > 2 else 0

    if v0 is None:
        v0 = np.random.default_rng(seed).standard_normal(dim)
    v = np.asarray(v0, dtype=float)
    v = v / np.linalg.norm(v)

    V = np.zeros((m + 1, dim))  # rows are basis vectors
    T = np.zeros((m + 1, m + 1))
    V[0] = v
    j0 = 0  # columns [0, j0) hold kept Ritz vectors with T diagonal already set
    matvecs = 0
    x = v
    theta = np.inf
    theta2 = np.inf
    res2 = np.inf
    scale = 1.0

    while True:
        j = j0
        breakdown = False
        while j < m:
            w = matvec(V[j])
            matvecs += 1
            B = V[: j + 1]
            h = B @ w
            w = w - h @ B
            # second pass guards against cancellation
            h2 = B @ w
            w = w - h2 @ B
            h = h + h2
            T[: j + 1, j] = h
            T[j, : j + 1] = h
            beta = np.linalg.norm(w)
            scale = max(scale, abs(h[j]))
            j += 1
            if beta <= 1e-14 * scale:
                breakdown = True
                break
            V[j] = w / beta
            T[j, j - 1] = T[j - 1, j] = beta
            if matvecs >= max_iter:
                break
            # cheap convergence estimate once a few vectors exist
            if j - j0 >= 4 and (j % 4 == 0 or j == m):
                evals, evecs = np.linalg.eigh(T[:j, :j])
                if abs(beta * evecs[-1, 0]) <= 0.1 * tol:
                    break

        k = j
        evals, evecs = np.linalg.eigh(T[:k, :k])
        theta = float(evals[0])
        x = evecs[:, 0] @ V[:k]
        x /= np.linalg.norm(x)
        r = matvec(x) - theta * x
        matvecs += 1
        res = float(np.linalg.norm(r))
        if k > 1:
            theta2 = float(evals[1])
            res2 = float(abs(beta * evecs[-1, 1])) if not breakdown else 0.0
        if res <= tol or breakdown:
            if breakdown and res > tol:
                log.warning("Lanczos invariant subspace reached with residual %.3e", res)
            return LanczosResult(theta, x, res, theta2, res2, matvecs)
        if matvecs >= max_iter:
            raise LanczosError(
                f"Lanczos did not converge: residual {res:.3e} after {matvecs} matvecs",
                LanczosResult(theta, x, res, theta2, res2, matvecs))

        # thick restart: kept Ritz vectors + residual direction
        nk = min(keep, k - 1)
        Y = evecs[:, :nk]
        X = Y.T @ V[:k]
        newV = np.zeros_like(V)
        # re-orthonormalize the kept block (QR keeps them accurate)
        q, rr = np.linalg.qr(X.T)
        newV[:nk] = (q * np.sign(np.diag(rr))).T
        vnext = V[k] - (newV[:nk] @ V[k]) @ newV[:nk]
        vnext /= np.linalg.norm(vnext)
        newV[nk] = vnext
        V = newV
        T = np.zeros((m + 1, m + 1))
        T[np.arange(nk), np.arange(nk)] = evals[:nk]
        j0 = nk
        # the coupling column of vnext is filled by the next expansion step
