"""Per-trajectory martingale coordinates and normalized fluctuation statistics.

A :class:`MartingaleTrack` carries, along one trajectory, the coordinates
``u_k(R_n)``, their exact means (updated incrementally, never estimated), and
the Gamma-ratio products, so the centered normalized martingales

    M_{n,k} = u_k(R_n - E R_n) * Gamma(n+1) / Gamma(n+1+w^k)      (k != m/2)
    M_{n,m/2} = n * u_{m/2}(R_n - E R_n)

are available in O(m) work per step.  On top of the track sit the limit
estimates Xi_k (the martingale value at a large horizon), the residual
vectors Pi_{n,k}, and the CLT-scale statistics X_{n,k}.

The track API is the readable per-step reference; the harness reproduces the
same numbers from the batched simulation kernels (bit-identical streams).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, ParameterError
from .exact_moments import (LogPolarComplex, gamma_one_plus_omega,
                            growth_factor_grid)
from .spectral import EigenData, eigen_data, index_class, phase_table
from .urn_core import UrnParams

_MODES = ("gamma_ratio", "power_phase")


@dataclass(frozen=True)
class MartingaleTrack:
    """State of the martingale coordinates after n steps of one trajectory."""

    params: UrnParams
    n: int
    u: np.ndarray        # (m,) complex, u[k] = u_k(R_n)
    mean_u: np.ndarray   # (m,) complex, exact E[u_k(R_n)]
    ratio: tuple         # per-k LogPolarComplex, c_n(w^k)
    counts: np.ndarray   # (m,) int64, the composition itself

    @property
    def m(self) -> int:
        return self.params.m

    @property
    def eigen(self) -> EigenData:
        return eigen_data(self.params.m)


def track_init(params: UrnParams) -> MartingaleTrack:
    """Track at n = 0: u_k = w^{k j}, all martingales zero, ratios one."""
    m, j = params.m, params.initial_type
    u = phase_table(m)[j].copy()
    counts = np.zeros(m, dtype=np.int64)
    counts[j] = 1
    one = LogPolarComplex(0.0, 0.0)
    return MartingaleTrack(params=params, n=0, u=u, mean_u=u.copy(),
                           ratio=(one,) * m, counts=counts)


def track_step(track: MartingaleTrack, drawn_type: int) -> MartingaleTrack:
    """Advance by one draw of ``drawn_type``; O(m) work.

    The caller guarantees the drawn type was actually present in the urn
    (counts[drawn_type] >= 1).
    """
    m = track.m
    if not 0 <= drawn_type < m:
        raise ParameterError(f"drawn_type must be in 0..{m - 1}, got {drawn_type}")
    if track.counts[drawn_type] < 1:
        raise ParameterError(f"type {drawn_type} has no ball to draw")
    added = (drawn_type + 1) % m
    u = track.u + phase_table(m)[added]
    counts = track.counts.copy()
    counts[added] += 1
    omega = track.eigen.omega
    factors = 1.0 + omega / (track.n + 1)
    mean_u = track.mean_u * factors
    ratio = tuple(r * f for r, f in zip(track.ratio, factors))
    return MartingaleTrack(params=track.params, n=track.n + 1, u=u,
                           mean_u=mean_u, ratio=ratio, counts=counts)


def martingale_values(track: MartingaleTrack) -> np.ndarray:
    """All M_{n,k}; the division by the Gamma ratio is done in log-polar form."""
    m = track.m
    out = np.empty(m, dtype=np.complex128)
    for k in range(m):
        centered = complex(track.u[k] - track.mean_u[k])
        if 2 * k == m:
            out[k] = track.n * centered  # zero at n = 0 by construction
        else:
            growth = track.ratio[k] * gamma_one_plus_omega(m, k)
            out[k] = (LogPolarComplex.from_complex(centered) / growth).to_complex()
    return out


@dataclass(frozen=True)
class XiEstimate:
    """Martingale limit realized as the value at a large finite horizon.

    The bias is known: ``E|M_{N,k} - Xi_k|^2 ~ N^{1-2*lam_k} / (2*lam_k - 1)``,
    so callers scale tolerances by ``(n/N)^{lam_k - 1/2}`` when the estimate
    centers a statistic at time n.
    """

    k: int
    n_limit: int
    value: complex


def xi_estimate(track: MartingaleTrack, k: int) -> XiEstimate:
    if index_class(track.m, k) != "large":
        raise DomainError(f"martingale limit exists in L2 only for lam_k > 1/2 "
                          f"(k={k} is {index_class(track.m, k)!r})")
    return XiEstimate(k=k, n_limit=track.n, value=complex(martingale_values(track)[k]))


def _growth_complex(track: MartingaleTrack, k: int) -> complex:
    return (track.ratio[k] * gamma_one_plus_omega(track.m, k)).to_complex()


def pi_residual(track: MartingaleTrack, xi: XiEstimate | None, k: int) -> np.ndarray:
    """Residual vector Pi_{n,k} of the centered projection onto v_k.

    Large coordinates subtract the Gamma-ratio-grown limit estimate; small
    ones are plain centered projections.
    """
    m = track.m
    if not 1 <= k <= m - 1:
        raise ParameterError(f"k must be in 1..{m - 1}, got {k}")
    centered = complex(track.u[k] - track.mean_u[k])
    v = track.eigen.vectors[k]
    if index_class(m, k) == "large":
        if xi is None:
            raise ParameterError("large projections need a XiEstimate")
        return (centered - _growth_complex(track, k) * xi.value) * v
    return centered * v


def x_statistic(track: MartingaleTrack, xi_map: dict, k: int,
                mode: str = "gamma_ratio") -> np.ndarray:
    """Normalized fluctuation vector X_{n,k}, real, in the (k, m-k) eigenplane.

    Scaling by coordinate class: large lam uses sqrt(n) after removing the
    grown limit (mode chooses the Gamma-ratio or the n^{i mu} pure-phase
    growth), lam = 1/2 uses sqrt(n log n), everything else sqrt(n).
    """
    m, n = track.m, track.n
    if mode not in _MODES:
        raise ParameterError(f"mode must be one of {_MODES}, got {mode!r}")
    if not 1 <= k <= m // 2:
        raise ParameterError(f"k must be in 1..{m // 2}, got {k}")
    if n < 2:
        raise ParameterError("X statistics need n >= 2")
    ev = track.eigen
    v = ev.vectors[k]
    centered = complex(track.u[k] - track.mean_u[k])
    cls = index_class(m, k)
    if cls == "large":
        if k not in xi_map:
            raise ParameterError(f"xi_map lacks an estimate for k={k}")
        xi_val = xi_map[k].value
        if mode == "gamma_ratio":
            grown = _growth_complex(track, k) * xi_val
        else:
            grown = cmath.exp(complex(ev.omega[k]) * math.log(n)) * xi_val
        return 2.0 * ((centered - grown) * v).real / math.sqrt(n)
    if cls == "critical":
        return 2.0 * (centered * v).real / math.sqrt(n * math.log(n))
    if 2 * k == m:
        return (centered * v).real / math.sqrt(n)
    return 2.0 * (centered * v).real / math.sqrt(n)


@dataclass(frozen=True)
class FluctuationSample:
    """All X_{n,k} of one trajectory at one checkpoint."""

    m: int
    n: int
    X: dict
    normalization_mode: str


def fluctuation_sample(track: MartingaleTrack, xi_map: dict,
                       mode: str = "gamma_ratio") -> FluctuationSample:
    xs = {k: x_statistic(track, xi_map, k, mode) for k in range(1, track.m // 2 + 1)}
    return FluctuationSample(m=track.m, n=track.n, X=xs, normalization_mode=mode)


# ---------------------------------------------------------------------------
# batched versions over replicate arrays (shared with the harness)
# ---------------------------------------------------------------------------

def xi_batch(u_last: np.ndarray, n_limit: int, m: int, k: int) -> np.ndarray:
    """M_{n_limit,k} for many replicates from the recorded u_k values."""
    if index_class(m, k) != "large":
        raise DomainError(f"lam_k > 1/2 required (k={k})")
    c = _kernels.scan_cn(eigen_data(m).omega[k], [n_limit])[0]
    return (u_last - c) / (gamma_one_plus_omega(m, k) * c)


def x_statistic_batch(u_at_n: np.ndarray, n: int, m: int, k: int,
                      mode: str = "gamma_ratio",
                      xi: np.ndarray | None = None) -> np.ndarray:
    """X_{n,k} for many replicates; returns shape (R, m).

    ``u_at_n`` holds u_k(R_n) per replicate; for a large k, ``xi`` holds the
    per-replicate limit estimates.  Matches :func:`x_statistic` bit-for-bit
    on the same trajectory.
    """
    if mode not in _MODES:
        raise ParameterError(f"mode must be one of {_MODES}, got {mode!r}")
    if not 1 <= k <= m // 2:
        raise ParameterError(f"k must be in 1..{m // 2}, got {k}")
    if n < 2:
        raise ParameterError("X statistics need n >= 2")
    ev = eigen_data(m)
    v = ev.vectors[k]
    d = u_at_n - _kernels.scan_cn(ev.omega[k], [n])[0]
    cls = index_class(m, k)
    if cls == "large":
        if xi is None:
            raise ParameterError(f"large coordinate k={k} needs xi estimates")
        if mode == "gamma_ratio":
            growth = growth_factor_grid([n], m, k)[0]
        else:
            growth = cmath.exp(complex(ev.omega[k]) * math.log(n))
        d = d - growth * xi
        denom = math.sqrt(n)
    elif cls == "critical":
        denom = math.sqrt(n * math.log(n))
    else:
        denom = math.sqrt(n)
    outer = d[:, None] * v[None, :]
    if 2 * k == m:
        return outer.real / denom
    return 2.0 * outer.real / denom
