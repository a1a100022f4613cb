"""Discrete Fourier eigenstructure of the cyclic replacement matrix.

For m types the replacement matrix is the cyclic shift, so its transpose has
the m-th roots of unity as eigenvalues and the DFT vectors

    v_k = (1/m) * (1, w^-k, w^-2k, ..., w^-(m-1)k),   w = exp(2*pi*i/m)

as right eigenvectors.  Everything downstream (moments, martingales, limit
covariances) is expressed in the coordinates u_k(x) = sum_t w^{kt} x_t of
this basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError

# Values of cos/sin(2*pi*k/m) this close to a representable special value are
# snapped.  The nearest non-special angle value for any m <= 10**6 is many
# orders of magnitude farther away, so the snap cannot misfire.
_SNAP_TOL = 1e-14
_SNAP_TARGETS = (0.0, 0.5, -0.5, 1.0, -1.0)


def _snap(x: float) -> float:
    for t in _SNAP_TARGETS:
        if abs(x - t) < _SNAP_TOL:
            return t
    return x


@lru_cache(maxsize=None)
def root_powers(m: int) -> np.ndarray:
    """All powers ``w^j`` for ``j = 0..m-1`` of the m-th root of unity.

    Each power is computed from its own angle (no repeated multiplication),
    special angles are snapped so that e.g. ``w^(m/2) == -1`` exactly, and the
    upper half is mirrored from the lower half so conjugate symmetry
    ``w^(m-j) == conj(w^j)`` holds bit-for-bit.
    """
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    w = np.empty(m, dtype=np.complex128)
    for j in range(m // 2 + 1):
        ang = 2.0 * math.pi * j / m
        w[j] = complex(_snap(math.cos(ang)), _snap(math.sin(ang)))
        if 0 < j < m - j:
            w[m - j] = w[j].conjugate()
    w.setflags(write=False)
    return w


@lru_cache(maxsize=None)
def phase_table(m: int) -> np.ndarray:
    """Matrix ``W[j, k] = w^{jk}`` (symmetric, indices mod m).

    Row ``j`` is the increment of the coordinate vector ``(u_0, ..., u_{m-1})``
    when a ball of type ``j`` is added, which is the O(m)-per-step update used
    by the simulation kernels.
    """
    w = root_powers(m)
    idx = (np.arange(m)[:, None] * np.arange(m)[None, :]) % m
    tab = w[idx]
    tab.setflags(write=False)
    return tab


@dataclass(frozen=True)
class EigenData:
    """Eigenvalues ``w^k = lam_k + i*mu_k`` and eigenvectors ``v_k``.

    ``vectors[k]`` is v_k; the rows satisfy ``conj(v_k) == v_{m-k}`` and
    ``<v_k, v_l> = delta_kl / m``.
    """

    m: int
    omega: np.ndarray    # (m,) complex, omega[k] = w^k
    lam: np.ndarray      # (m,) float, Re w^k
    mu: np.ndarray       # (m,) float, Im w^k
    vectors: np.ndarray  # (m, m) complex, vectors[k] = v_k

    def v(self, k: int) -> np.ndarray:
        return self.vectors[k % self.m]


@lru_cache(maxsize=None)
def eigen_data(m: int) -> EigenData:
    if m < 2:
        raise ParameterError(f"m must be >= 2, got {m}")
    w = root_powers(m)
    # v_k[t] = w^{-kt} / m = conj(w^{kt}) / m
    vectors = np.conj(phase_table(m)) / m
    lam = w.real.copy()
    mu = w.imag.copy()
    for a in (lam, mu, vectors):
        a.setflags(write=False)
    return EigenData(m=m, omega=w, lam=lam, mu=mu, vectors=vectors)


def index_class(m: int, k: int) -> str:
    """Classify coordinate k by its eigenvalue real part.

    Returns ``"drift"`` (k = 0), ``"large"`` (lam_k > 1/2), ``"critical"``
    (lam_k = 1/2, only when 6 | m) or ``"small"`` (lam_k < 1/2).  The test is
    integer arithmetic on (m, k), so the lam_k = 1/2 boundary is exact.
    """
    k %= m
    if k == 0:
        return "drift"
    if 6 * k == m or 6 * k == 5 * m:
        return "critical"
    if 6 * k < m or 6 * k > 5 * m:
        return "large"
    return "small"


def large_indices(m: int) -> list[int]:
    """All k in 1..m-1 with lam_k > 1/2, i.e. {1..r} and the conjugates."""
    return [k for k in range(1, m) if index_class(m, k) == "large"]


def dft_coordinate(x, k: int):
    """Coordinate ``u_k(x) = sum_t w^{kt} x_t`` of a length-m vector."""
    x = np.asarray(x)
    m = x.shape[-1]
    if not 0 <= k < m:
        raise ParameterError(f"k must be in 0..{m - 1}, got {k}")
    return x @ phase_table(m)[:, k]


def dft_all(x) -> np.ndarray:
    """All m coordinates ``(u_0(x), ..., u_{m-1}(x))`` at once."""
    x = np.asarray(x)
    return x @ phase_table(x.shape[-1])


def from_coordinates(u) -> np.ndarray:
    """Inverse of :func:`dft_all`: reconstruct ``x = sum_k u_k v_k``."""
    u = np.asarray(u, dtype=np.complex128)
    return u @ eigen_data(u.shape[-1]).vectors


def project_pair(x, k: int) -> np.ndarray:
    """Real projection of x onto the eigenplane of the pair (k, m-k).

    For ``1 <= k < m/2`` this is ``(pi_k + pi_{m-k})(x) = 2 Re(u_k(x) v_k)``;
    for even m and ``k = m/2`` it is the single projection ``pi_{m/2}(x)``,
    which is real for real x.
    """
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[-1]
    if not 1 <= k <= m // 2:
        raise ParameterError(f"k must be in 1..{m // 2}, got {k}")
    u = dft_coordinate(x, k)
    v = eigen_data(m).vectors[k]
    if 2 * k == m:
        return (u * v).real
    return 2.0 * (u * v).real


def shift_action(x) -> np.ndarray:
    """Apply the transposed replacement matrix: ``(R^t x)_i = x_{i-1 mod m}``."""
    return np.roll(np.asarray(x), 1, axis=-1)
