"""Closed-form first and second moments of the cyclic urn.

Everything here reduces to products of the factors ``1 + z/s``:

    c_n(z) = prod_{s=1}^n (1 + z/s) = Gamma(n+1+z) / (Gamma(n+1) Gamma(1+z)),

evaluated by O(n) forward scans (kernels module).  The coordinate means are
``E[u_k(R_n)] = w^{kj} c_n(w^k)`` for initial type j, the mixed second
moments follow the two-part product/sum formula, and the martingale

    M_{n,k} = u_k(R_n - E R_n) * Gamma(n+1) / Gamma(n+1+w^k)

has second moment computable from them.  Only the constants Gamma(1+w^k) come
from the Lanczos log-gamma; every n-dependent ratio is a finite product.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import _kernels
from .errors import DomainError, ParameterError
from .lgamma import gamma
from .spectral import eigen_data, index_class, root_powers

_TAU = 2.0 * math.pi


def _wrap_phase(p: float) -> float:
    p = (p + math.pi) % _TAU - math.pi
    return math.pi if p == -math.pi else p


@dataclass(frozen=True)
class LogPolarComplex:
    """A complex number stored as ``exp(log_modulus) * exp(i*phase)``.

    Products of thousands of factors whose modulus grows polynomially stay
    representable in this form; zero gets a dedicated flag.  Multiplication
    adds log-moduli and wraps phases into (-pi, pi].
    """

    log_modulus: float
    phase: float
    is_zero: bool = False

    @staticmethod
    def from_complex(z: complex) -> "LogPolarComplex":
        z = complex(z)
        if z == 0:
            return LogPolarComplex(-math.inf, 0.0, True)
        # 0.5*log(re^2+im^2) rather than log(abs) so that multiplying by one
        # more factor reproduces the kernel scans bit-for-bit
        return LogPolarComplex(0.5 * math.log(z.real * z.real + z.imag * z.imag),
                               math.atan2(z.imag, z.real))

    def to_complex(self) -> complex:
        if self.is_zero:
            return 0j
        return cmath.rect(math.exp(self.log_modulus), self.phase)

    @property
    def modulus(self) -> float:
        return 0.0 if self.is_zero else math.exp(self.log_modulus)

    def _coerce(self, other) -> "LogPolarComplex":
        if isinstance(other, LogPolarComplex):
            return other
        return LogPolarComplex.from_complex(other)

    def __mul__(self, other) -> "LogPolarComplex":
        other = self._coerce(other)
        if self.is_zero or other.is_zero:
            return LogPolarComplex(-math.inf, 0.0, True)
        return LogPolarComplex(self.log_modulus + other.log_modulus,
                               _wrap_phase(self.phase + other.phase))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogPolarComplex":
        other = self._coerce(other)
        if other.is_zero:
            raise ZeroDivisionError("division by a zero LogPolarComplex")
        if self.is_zero:
            return self
        return LogPolarComplex(self.log_modulus - other.log_modulus,
                               _wrap_phase(self.phase - other.phase))


def gamma_ratio(n: int, z: complex) -> LogPolarComplex:
    """``prod_{s=1}^n (1 + z/s)`` in log-polar form; exact zero when z = -s."""
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    logmod, phase, zero = _kernels.scan_log_ratio(z, [n])
    return LogPolarComplex(float(logmod[0]), float(phase[0]), bool(zero[0]))


@lru_cache(maxsize=None)
def gamma_one_plus_omega(m: int, k: int) -> complex:
    """The constant ``Gamma(1 + w^k)``; undefined for k = m/2 (pole)."""
    if 2 * (k % m) == m:
        raise DomainError("Gamma(1 + w^k) has a pole at k = m/2")
    return gamma(1.0 + complex(root_powers(m)[k % m]))


def mean_u(n: int, m: int, k: int, initial_type: int = 0) -> complex:
    """``E[u_k(R_n)] = w^{k j} c_n(w^k)`` for one initial ball of type j."""
    w = root_powers(m)
    if not 0 <= k < m:
        raise ParameterError(f"k must be in 0..{m - 1}, got {k}")
    if not 0 <= initial_type < m:
        raise ParameterError(f"initial_type must be in 0..{m - 1}")
    c = _kernels.scan_cn(w[k], [n])[0]
    return complex(w[(k * initial_type) % m] * c)


def mean_u_grid(ns, m: int, k: int, initial_type: int = 0) -> np.ndarray:
    phase = root_powers(m)[(k * initial_type) % m]
    return phase * _kernels.scan_cn(root_powers(m)[k], ns)


def mean_vector(n: int, m: int, initial_type: int = 0) -> np.ndarray:
    """Exact ``E[R_n]``, real with entries summing to n + 1."""
    ev = eigen_data(m)
    coords = np.array([mean_u(n, m, k, initial_type) for k in range(m)])
    return (coords @ ev.vectors).real


def mean_vector_grid(ns, m: int, initial_type: int = 0) -> np.ndarray:
    """Exact means at several n in a single pass per coordinate, shape (C, m)."""
    ev = eigen_data(m)
    coords = np.stack([mean_u_grid(ns, m, k, initial_type) for k in range(m)], axis=1)
    return (coords @ ev.vectors).real


def mixed_moment(n: int, m: int, k: int, l: int) -> complex:
    """``E[u_k(R_n) u_l(R_n)]`` for the urn started with one ball of type 0."""
    return complex(mixed_moment_grid([n], m, k, l)[0])


def mixed_moment_grid(ns, m: int, k: int, l: int) -> np.ndarray:
    w = root_powers(m)
    if not (0 <= k < m and 0 <= l < m):
        raise ParameterError(f"k, l must be in 0..{m - 1}, got ({k}, {l})")
    return _kernels.scan_mixed_moment(w[k] + w[l], w[(k + l) % m], ns)


class MomentTable:
    """Exact coordinate moments at fixed (m, n): means eagerly, mixed lazily."""

    def __init__(self, m: int, n: int, initial_type: int = 0):
        self.m, self.n, self.initial_type = m, n, initial_type

    @cached_property
    def mean(self) -> np.ndarray:
        return np.array([mean_u(self.n, self.m, k, self.initial_type)
                         for k in range(self.m)])

    @cached_property
    def mixed(self) -> np.ndarray:
        if self.initial_type != 0:
            raise DomainError("mixed moments are tabulated for initial type 0")
        out = np.empty((self.m, self.m), dtype=np.complex128)
        for k in range(self.m):
            for l in range(k, self.m):
                out[k, l] = out[l, k] = mixed_moment(self.n, self.m, k, l)
        return out


def second_moment_M(n: int, m: int, k: int) -> float:
    """``E|M_{n,k}|^2`` of the normalized martingale, k != m/2."""
    return float(second_moment_M_grid([n], m, k)[0])


def second_moment_M_grid(ns, m: int, k: int) -> np.ndarray:
    if not 0 <= k < m:
        raise ParameterError(f"k must be in 0..{m - 1}, got {k}")
    if 2 * k == m:
        raise DomainError("k = m/2 uses the n * u_{m/2} martingale, not the "
                          "Gamma-ratio form")
    lam = float(eigen_data(m).lam[k])
    euu, logc2 = _kernels.scan_pair_moment(2.0 * lam, ns)
    g2 = abs(gamma_one_plus_omega(m, k)) ** 2
    # E|M_n|^2 = (E[u_k u_{m-k}] - |c_n|^2) / (|Gamma(1+w^k)|^2 |c_n|^2)
    return (euu * np.exp(-logc2) - 1.0) / g2


def xi_second_moment(m: int, k: int, n_limit: int, extrapolate: bool = True) -> float:
    """``E|Xi_k|^2`` as the limit of ``E|M_{n,k}|^2``.

    The martingale second moment converges like ``L - c n^{1-2*lam}``; with
    ``extrapolate`` the coefficient is eliminated from the two points
    (n_limit/2, n_limit), otherwise the raw value at n_limit is returned.
    """
    if index_class(m, k) != "large":
        raise DomainError(f"lam_k > 1/2 required, got class {index_class(m, k)!r}")
    if n_limit < 4:
        raise ParameterError("n_limit must be >= 4")
    lam = float(eigen_data(m).lam[k])
    half = n_limit // 2
    e_half, e_full = second_moment_M_grid([half, n_limit], m, k)
    if not extrapolate:
        return float(e_full)
    w_full = float(n_limit) ** (1.0 - 2.0 * lam)
    w_half = float(half) ** (1.0 - 2.0 * lam)
    return float(e_full + (e_full - e_half) * w_full / (w_half - w_full))


@dataclass(frozen=True)
class ResidualL2:
    """Residual second moment ``E|M_{n,k} - Xi_k|^2`` and its normalization."""

    m: int
    k: int
    n: int
    n_limit: int
    value: float            # E|Xi|^2 estimate minus E|M_n|^2
    normalized: float       # (2 lam - 1) n^{2 lam - 1} * value, -> 1
    raw_truncated: float    # E|M_{n_limit}|^2 - E|M_n|^2 (0 at n = n_limit)
    xi_second_moment: float
    extrapolated: bool
    model: str


def residual_l2(n: int, m: int, k: int, n_limit: int,
                extrapolate: bool = True) -> ResidualL2:
    """L2 distance of the martingale from its limit, with the known rate.

    The normalized value converges to 1; the ``n^{1-2*lam}`` truncation bias
    of approximating ``E|Xi|^2`` by ``E|M_{n_limit}|^2`` is removed by default
    (``extrapolate``), which matters whenever lam_k is close to 1/2.
    """
    if index_class(m, k) != "large":
        raise DomainError(f"lam_k > 1/2 required, got class {index_class(m, k)!r}")
    if not 1 <= n <= n_limit:
        raise ParameterError(f"need 1 <= n <= n_limit, got n={n}, n_limit={n_limit}")
    if n_limit < 4:
        raise ParameterError("n_limit must be >= 4")
    lam = float(eigen_data(m).lam[k])
    half = n_limit // 2
    grid = sorted({n, half, n_limit})
    em = dict(zip(grid, second_moment_M_grid(grid, m, k)))
    raw = float(em[n_limit] - em[n])
    if extrapolate:
        w_full = float(n_limit) ** (1.0 - 2.0 * lam)
        w_half = float(half) ** (1.0 - 2.0 * lam)
        limit = float(em[n_limit] + (em[n_limit] - em[half]) * w_full / (w_half - w_full))
        model = "two-point power-law extrapolation in n^(1-2*lam) at (n_limit/2, n_limit)"
    else:
        limit = float(em[n_limit])
        model = "truncation at n_limit"
    value = limit - float(em[n])
    normalized = (2.0 * lam - 1.0) * float(n) ** (2.0 * lam - 1.0) * value
    return ResidualL2(m=m, k=k, n=n, n_limit=n_limit, value=value,
                      normalized=normalized, raw_truncated=raw,
                      xi_second_moment=limit, extrapolated=extrapolate, model=model)


def growth_factor(n: int, m: int, k: int) -> complex:
    """``Gamma(n+1+w^k)/Gamma(n+1) = Gamma(1+w^k) c_n(w^k)``, k != m/2."""
    return gamma_one_plus_omega(m, k) * complex(_kernels.scan_cn(root_powers(m)[k], [n])[0])


def growth_factor_grid(ns, m: int, k: int) -> np.ndarray:
    return gamma_one_plus_omega(m, k) * _kernels.scan_cn(root_powers(m)[k], ns)


def mean_expansion(n: int, m: int) -> np.ndarray:
    """Drift plus the r = floor((m-1)/6) oscillating terms of ``E[R_n]``.

    Remainder versus the exact mean is O(sqrt(n)); the oscillating amplitudes
    need Gamma(1 + w^k) from the Lanczos routine.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    ev = eigen_data(m)
    out = np.full(m, (n + 1) / m, dtype=np.float64)
    r = (m - 1) // 6
    log_n = math.log(n)
    for k in range(1, r + 1):
        xi_k = 2.0 * ev.vectors[k] / gamma_one_plus_omega(m, k)
        phase = cmath.exp(1j * ev.mu[k] * log_n)
        out += (phase * xi_k).real * n ** ev.lam[k]
    return out


@dataclass(frozen=True)
class MixedResidualCheck:
    measured: float
    bound_scale: float


def mixed_residual_bound_check(n: int, m: int, k: int, l: int,
                               n_limit: int) -> MixedResidualCheck:
    """Cross-residual ``|E[(M_{n,k}-Xi_k)(M_{n,l}-Xi_l)]|`` and its O-scale.

    Uses the same centering trick as :func:`residual_l2`: martingale increment
    orthogonality turns the cross-residual into a difference of the exact
    mixed martingale moments at n and at n_limit.  The returned scale is
    ``1/n + n^{lam_{k+l} - lam_k - lam_l}``; the ratio measured/scale stays
    bounded.
    """
    if k == l:
        raise ParameterError("k = l is residual_l2's job; this check needs k != l")
    for kk in (k, l):
        if index_class(m, kk) != "large":
            raise DomainError(f"lam > 1/2 required for k={kk}")
    if not 1 <= n <= n_limit:
        raise ParameterError(f"need 1 <= n <= n_limit, got n={n}, n_limit={n_limit}")
    ev = eigen_data(m)
    grid = sorted({n, n_limit})
    mm = mixed_moment_grid(grid, m, k, l)
    ck = _kernels.scan_cn(ev.omega[k], grid)
    cl = _kernels.scan_cn(ev.omega[l], grid)
    gk = gamma_one_plus_omega(m, k)
    gl = gamma_one_plus_omega(m, l)
    emm = (mm - ck * cl) / (gk * ck * gl * cl)
    measured = abs(emm[-1] - emm[0]) if n_limit > n else 0.0
    scale = 1.0 / n + float(n) ** float(ev.lam[(k + l) % m] - ev.lam[k] - ev.lam[l])
    return MixedResidualCheck(measured=float(measured), bound_scale=float(scale))
