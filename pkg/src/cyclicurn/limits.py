"""Limit covariance matrices, their ranks, and the fixed-point equation.

The per-pair covariance blocks are weighted sums of the rank-one projectors
``v_k v_k*``; summed over all pairs they give the theorem-level covariance,
whose rank is m-1 in general and drops to 2 when 6 divides m (only the
lam = 1/2 pair survives the extra sqrt(log n) damping).
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ParameterError
from .exact_moments import gamma_one_plus_omega
from .spectral import eigen_data, index_class

# symmetric PSD m x m matrices are plain numpy arrays throughout
CovMatrix = np.ndarray


def _pair_block(m: int, k: int, weight: float) -> np.ndarray:
    v = eigen_data(m).vectors[k]
    outer = np.outer(v, v.conj())
    return weight * (outer + outer.conj()).real


def sigma_k(m: int, k: int) -> CovMatrix:
    """Limit covariance of X_{n,k} for 1 <= k <= m/2.

    Weight 1/|2 lam_k - 1| on ``v_k v_k* + v_{m-k} v_{m-k}*`` in general;
    weight 1 for the lam = 1/2 pair; the single projector (weight 1/3, since
    lam_{m/2} = -1) for k = m/2.
    """
    if not 1 <= k <= m // 2:
        raise ParameterError(f"k must be in 1..{m // 2}, got {k}")
    ev = eigen_data(m)
    if 2 * k == m:
        v = ev.vectors[k]
        return np.outer(v, v.conj()).real / 3.0
    if index_class(m, k) == "critical":
        return _pair_block(m, k, 1.0)
    return _pair_block(m, k, 1.0 / abs(2.0 * ev.lam[k] - 1.0))


def sigma_total(m: int) -> CovMatrix:
    """Theorem-level covariance: full weighted sum, or the lam = 1/2 block."""
    if m < 7:
        raise DomainError(f"the limit theorems need m >= 7, got {m}")
    ev = eigen_data(m)
    if m % 6 == 0:
        return _pair_block(m, m // 6, 1.0)
    out = np.zeros((m, m))
    for k in range(1, m):
        v = ev.vectors[k]
        out += (np.outer(v, v.conj()) / abs(2.0 * ev.lam[k] - 1.0)).real
    return out


def numerical_rank(mat: CovMatrix, tol: float = 1e-9) -> int:
    """Eigenvalues above ``tol * largest``; requires a symmetric input."""
    mat = np.asarray(mat, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ParameterError(f"need a square matrix, got shape {mat.shape}")
    scale = np.abs(mat).max()
    if not np.allclose(mat, mat.T, atol=1e-12 * max(scale, 1.0), rtol=0.0):
        raise ParameterError("matrix is not symmetric")
    if scale == 0.0:
        return 0
    eig = np.linalg.eigvalsh(mat)
    return int((eig > tol * eig.max()).sum())


def _require_large(m: int, k: int) -> complex:
    if index_class(m, k) != "large":
        raise DomainError(f"lam_k > 1/2 required, k={k} is {index_class(m, k)!r}")
    return complex(eigen_data(m).omega[k])


def g_k(u, m: int, k: int):
    """Inhomogeneous term of the fixed-point equation,

        g_k(u) = (u^{w^k} + w^k (1-u)^{w^k} - 1) / Gamma(1 + w^k),

    with principal complex powers on 0 < u < 1.  Integrates to zero over the
    unit interval.  Accepts scalars or arrays.
    """
    w = _require_large(m, k)
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise DomainError("u must lie strictly inside (0, 1)")
    val = (np.exp(w * np.log(u)) + w * np.exp(w * np.log1p(-u)) - 1.0)
    val = val / gamma_one_plus_omega(m, k)
    return complex(val) if val.ndim == 0 else val


def fixpoint_rhs(xi0, xi1, u, m: int, k: int):
    """One draw of the right side of the distributional fixed point:

        u^{w^k} xi0 + w^k (1-u)^{w^k} xi1 + g_k(u).

    With (xi0, xi1, u) independent and xi0, xi1 distributed like Xi_k, the
    result is again distributed like Xi_k.  Vectorized over same-length
    inputs.
    """
    w = _require_large(m, k)
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise DomainError("u must lie strictly inside (0, 1)")
    val = (np.exp(w * np.log(u)) * np.asarray(xi0)
           + w * np.exp(w * np.log1p(-u)) * np.asarray(xi1)
           + g_k(u, m, k))
    return complex(val) if val.ndim == 0 else val
