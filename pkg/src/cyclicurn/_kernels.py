"""Hot numerical kernels: numba fast path with a pure python/numpy fallback.

Two families of loops dominate the package's runtime and live here:

* per-step trajectory simulation that tracks the DFT coordinates u_k
  incrementally (O(m) work per draw), batched over replicates;
* O(n) forward scans that evaluate the closed-form first and second moment
  formulas at a grid of checkpoints with O(1) memory.

The backend is selected once at import time from ``CYCLICURN_BACKEND``:

* ``auto`` (default) - numba when importable, fallback otherwise;
* ``numba``         - require numba, raise ImportError if missing;
* ``numpy``         - force the fallback.

Both backends are bit-for-bit identical (the test suite asserts this); the
fallback is orders of magnitude slower on the simulation kernels and exists
for debugging, portability and benchmarking (``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import ParameterError
from .rng import GOLDEN, MASK64, MIX_A, MIX_B
from .spectral import phase_table

try:
    import numba
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False

_FLAG = os.environ.get("CYCLICURN_BACKEND", "auto").strip().lower()
if _FLAG == "numba" and not HAS_NUMBA:
    raise ImportError("CYCLICURN_BACKEND=numba but numba is not importable")
USE_NUMBA = HAS_NUMBA and _FLAG != "numpy"

_TAU = 2.0 * math.pi

# uint64 constants for the numba path (wraparound arithmetic is intended)
_U_GOLDEN = np.uint64(GOLDEN)
_U_MIX_A = np.uint64(MIX_A)
_U_MIX_B = np.uint64(MIX_B)
_U_ZERO = np.uint64(0)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S32 = np.uint64(32)
_M32 = np.uint64(0xFFFFFFFF)


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def set_threads(threads: int | None) -> int:
    """Cap the numba thread pool; returns the effective thread count."""
    if not USE_NUMBA:
        return 1
    if threads is not None:
        numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()


# ---------------------------------------------------------------------------
# trajectory simulation with incremental u_k tracking
# ---------------------------------------------------------------------------

def _sim_u_one_py(m, init_type, cps, seed, table, u_out, counts_out):
    counts = np.zeros(m, dtype=np.int64)
    counts[init_type] = 1
    u = table[init_type].copy()
    state = int(seed)
    ci = 0
    ncp = len(cps)
    if cps[0] == 0:
        u_out[0] = u
        counts_out[0] = counts
        ci = 1
    n_max = int(cps[ncp - 1])
    for n in range(n_max):
        bound = n + 1
        state = (state + GOLDEN) & MASK64
        x = state
        x = ((x ^ (x >> 30)) * MIX_A) & MASK64
        x = ((x ^ (x >> 27)) * MIX_B) & MASK64
        x = x ^ (x >> 31)
        p = x * bound
        lo = p & MASK64
        if lo < bound:  # rare unbiasedness correction of the Lemire reduction
            t = (MASK64 - bound + 1) % bound
            while lo < t:
                state = (state + GOLDEN) & MASK64
                x = state
                x = ((x ^ (x >> 30)) * MIX_A) & MASK64
                x = ((x ^ (x >> 27)) * MIX_B) & MASK64
                x = x ^ (x >> 31)
                p = x * bound
                lo = p & MASK64
        idx = p >> 64
        i = 0
        acc = int(counts[0])
        while idx >= acc:
            i += 1
            acc += int(counts[i])
        i1 = i + 1
        if i1 == m:
            i1 = 0
        counts[i1] += 1
        u += table[i1]
        if ci < ncp and n + 1 == cps[ci]:
            u_out[ci] = u
            counts_out[ci] = counts
            ci += 1


def _sim_u_one_nb_src(m, init_type, cps, seed, table, u_out, counts_out):
    counts = np.zeros(m, dtype=np.int64)
    counts[init_type] = 1
    u = np.zeros(m, dtype=np.complex128)
    for k in range(m):
        u[k] = table[init_type, k]
    state = seed
    ci = 0
    ncp = cps.shape[0]
    if cps[0] == 0:
        for k in range(m):
            u_out[0, k] = u[k]
            counts_out[0, k] = counts[k]
        ci = 1
    n_max = cps[ncp - 1]
    for n in range(n_max):
        bound = np.uint64(n + 1)
        state = state + _U_GOLDEN
        x = state
        x = (x ^ (x >> _S30)) * _U_MIX_A
        x = (x ^ (x >> _S27)) * _U_MIX_B
        x = x ^ (x >> _S31)
        # Lemire reduction: idx = high 64 bits of the 96-bit product x*bound
        # (bound < 2^32), with the rare low-word rejection for exactness
        p_lo = (x & _M32) * bound
        p_hi = (x >> _S32) * bound
        lo = (p_hi << _S32) + p_lo
        if lo < bound:
            t = (_U_ZERO - bound) % bound
            while lo < t:
                state = state + _U_GOLDEN
                x = state
                x = (x ^ (x >> _S30)) * _U_MIX_A
                x = (x ^ (x >> _S27)) * _U_MIX_B
                x = x ^ (x >> _S31)
                p_lo = (x & _M32) * bound
                p_hi = (x >> _S32) * bound
                lo = (p_hi << _S32) + p_lo
        idx = np.int64((p_hi + (p_lo >> _S32)) >> _S32)
        i = 0
        acc = counts[0]
        while idx >= acc:
            i += 1
            acc += counts[i]
        i1 = i + 1
        if i1 == m:
            i1 = 0
        counts[i1] += 1
        for k in range(m):
            u[k] = u[k] + table[i1, k]
        if ci < ncp and n + 1 == cps[ci]:
            for k in range(m):
                u_out[ci, k] = u[k]
                counts_out[ci, k] = counts[k]
            ci += 1


# ---------------------------------------------------------------------------
# binary search tree growth (external-node array, O(1) per step)
# ---------------------------------------------------------------------------

def _bst_counts_one_py(m, n, seed, counts_out):
    labels = np.zeros(n + 1, dtype=np.int64)
    size = 1
    state = int(seed)
    for _ in range(n):
        bound = size
        state = (state + GOLDEN) & MASK64
        x = state
        x = ((x ^ (x >> 30)) * MIX_A) & MASK64
        x = ((x ^ (x >> 27)) * MIX_B) & MASK64
        x = x ^ (x >> 31)
        p = x * bound
        lo = p & MASK64
        if lo < bound:
            t = (MASK64 - bound + 1) % bound
            while lo < t:
                state = (state + GOLDEN) & MASK64
                x = state
                x = ((x ^ (x >> 30)) * MIX_A) & MASK64
                x = ((x ^ (x >> 27)) * MIX_B) & MASK64
                x = x ^ (x >> 31)
                p = x * bound
                lo = p & MASK64
        idx = p >> 64
        j = labels[idx]
        # left child keeps the parent label (in place), right child appends
        labels[size] = (j + 1) % m
        size += 1
    counts_out[:] = 0
    for t in range(size):
        counts_out[labels[t]] += 1


def _bst_counts_one_nb_src(m, n, seed, counts_out):
    labels = np.zeros(n + 1, dtype=np.int64)
    size = 1
    state = seed
    for _ in range(n):
        bound = np.uint64(size)
        threshold = (_U_ZERO - bound) % bound
        while True:
            state = state + _U_GOLDEN
            x = state
            x = (x ^ (x >> _S30)) * _U_MIX_A
            x = (x ^ (x >> _S27)) * _U_MIX_B
            x = x ^ (x >> _S31)
            if x >= threshold:
                break
        idx = np.int64(x % bound)
        j = labels[idx]
        labels[size] = (j + 1) % m
        size += 1
    for t in range(counts_out.shape[0]):
        counts_out[t] = 0
    for t in range(size):
        counts_out[labels[t]] += 1


# ---------------------------------------------------------------------------
# O(n) forward scans for the closed-form moments
# ---------------------------------------------------------------------------
# E[u_k u_{m-k}](n) obeys the single forward recursion
#     A_n = A_{n-1} * f_n,  G_n = f_n * G_{n-1} + 1,  f_n = 1 + 2*lam_k/n,
#     E[u_k u_{m-k}](n) = A_n + G_n,
# which is algebraically identical to the prefix/suffix product form but
# needs O(1) memory and handles an exactly-zero factor with no special case.

def _scan_pair_moment_src(two_lambda, ns, out_euu, out_logc2):
    A = 1.0
    G = 0.0
    lc2 = 0.0
    ci = 0
    ncp = ns.shape[0]
    if ns[0] == 0:
        out_euu[0] = 1.0
        out_logc2[0] = 0.0
        ci = 1
    n_max = ns[ncp - 1]
    for s in range(1, n_max + 1):
        f = 1.0 + two_lambda / s
        G = f * G + 1.0
        A = A * f
        lc2 = lc2 + math.log1p((two_lambda + 1.0 / s) / s)
        if ci < ncp and s == ns[ci]:
            out_euu[ci] = A + G
            out_logc2[ci] = lc2
            ci += 1


def _scan_mixed_src(zs, zc, ns, out):
    # E[u_k u_l](n) = A_n + zc * H_n with
    #   A_n = prod (1 + zs/s),  B_n = prod (1 + zc/s),
    #   H_n = f_n * H_{n-1} + B_{n-1}/n.
    A = 1.0 + 0.0j
    B = 1.0 + 0.0j
    H = 0.0 + 0.0j
    ci = 0
    ncp = ns.shape[0]
    if ns[0] == 0:
        out[0] = 1.0 + 0.0j
        ci = 1
    n_max = ns[ncp - 1]
    for s in range(1, n_max + 1):
        f = 1.0 + zs / s
        H = f * H + B / s
        A = A * f
        B = B * (1.0 + zc / s)
        if ci < ncp and s == ns[ci]:
            out[ci] = A + zc * H
            ci += 1


def _scan_cn_src(z, ns, out):
    c = 1.0 + 0.0j
    ci = 0
    ncp = ns.shape[0]
    if ns[0] == 0:
        out[0] = 1.0 + 0.0j
        ci = 1
    n_max = ns[ncp - 1]
    for s in range(1, n_max + 1):
        c = c * (1.0 + z / s)
        if ci < ncp and s == ns[ci]:
            out[ci] = c
            ci += 1


def _scan_log_ratio_src(zr, zi, ns, out_logmod, out_phase, out_zero):
    # log-polar accumulation of prod (1 + z/s); the phase is wrapped to
    # (-pi, pi] after every factor so that multiplying the result by one more
    # factor reproduces the next scan value bit-for-bit.
    lm = 0.0
    ph = 0.0
    zero = False
    ci = 0
    ncp = ns.shape[0]
    if ns[0] == 0:
        out_logmod[0] = 0.0
        out_phase[0] = 0.0
        out_zero[0] = False
        ci = 1
    n_max = ns[ncp - 1]
    for s in range(1, n_max + 1):
        fr = 1.0 + zr / s
        fi = zi / s
        if fr == 0.0 and fi == 0.0:
            zero = True
        if not zero:
            lm = lm + 0.5 * math.log(fr * fr + fi * fi)
            ph = (ph + math.atan2(fi, fr) + math.pi) % _TAU - math.pi
            if ph == -math.pi:
                ph = math.pi
        if ci < ncp and s == ns[ci]:
            if zero:
                out_logmod[ci] = -np.inf
                out_phase[ci] = 0.0
            else:
                out_logmod[ci] = lm
                out_phase[ci] = ph
            out_zero[ci] = zero
            ci += 1


# ---------------------------------------------------------------------------
# backend wiring
# ---------------------------------------------------------------------------

if HAS_NUMBA:
    _sim_u_one_nb = njit(cache=True)(_sim_u_one_nb_src)
    _bst_counts_one_nb = njit(cache=True)(_bst_counts_one_nb_src)
    _scan_pair_moment_nb = njit(cache=True)(_scan_pair_moment_src)
    _scan_mixed_nb = njit(cache=True)(_scan_mixed_src)
    _scan_cn_nb = njit(cache=True)(_scan_cn_src)
    _scan_log_ratio_nb = njit(cache=True)(_scan_log_ratio_src)

    @njit(cache=True, parallel=True)
    def _sim_u_many_nb(m, init_type, cps, seeds, table, u_out, counts_out):
        for r in prange(seeds.shape[0]):
            _sim_u_one_nb(m, init_type, cps, seeds[r], table, u_out[r], counts_out[r])

    @njit(cache=True, parallel=True)
    def _bst_counts_many_nb(m, n, seeds, counts_out):
        for r in prange(seeds.shape[0]):
            _bst_counts_one_nb(m, n, seeds[r], counts_out[r])


def _as_checkpoints(checkpoints) -> np.ndarray:
    cps = np.asarray(checkpoints, dtype=np.int64)
    if cps.ndim != 1 or cps.size == 0:
        raise ParameterError("checkpoints must be a non-empty 1-d sequence")
    if cps[0] < 0 or np.any(np.diff(cps) <= 0):
        raise ParameterError("checkpoints must be strictly increasing and >= 0")
    return cps


def sim_u_many(m, initial_type, checkpoints, seeds):
    """Simulate independent trajectories; record u and counts at checkpoints.

    Returns ``(u, counts)`` with shapes ``(R, C, m)`` where ``R = len(seeds)``
    and ``C = len(checkpoints)``.  Replicate r is a deterministic function of
    ``seeds[r]`` alone, so results do not depend on thread scheduling.
    """
    cps = _as_checkpoints(checkpoints)
    seeds = np.asarray(seeds, dtype=np.uint64)
    table = phase_table(m)
    R, C = seeds.shape[0], cps.shape[0]
    u_out = np.empty((R, C, m), dtype=np.complex128)
    counts_out = np.empty((R, C, m), dtype=np.int64)
    if USE_NUMBA:
        _sim_u_many_nb(m, initial_type, cps, seeds, table, u_out, counts_out)
    else:
        for r in range(R):
            _sim_u_one_py(m, initial_type, cps, int(seeds[r]), table,
                          u_out[r], counts_out[r])
    return u_out, counts_out


def bst_counts_many(m, n, seeds):
    """Leaf-label counts of independently grown binary search trees, (R, m)."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    out = np.empty((seeds.shape[0], m), dtype=np.int64)
    if USE_NUMBA:
        _bst_counts_many_nb(m, int(n), seeds, out)
    else:
        for r in range(seeds.shape[0]):
            _bst_counts_one_py(m, int(n), int(seeds[r]), out[r])
    return out


def scan_pair_moment(two_lambda, checkpoints):
    """``E[u_k u_{m-k}](n)`` and ``log |c_n(w^k)|^2`` at each checkpoint."""
    cps = _as_checkpoints(checkpoints)
    euu = np.empty(cps.shape[0], dtype=np.float64)
    logc2 = np.empty(cps.shape[0], dtype=np.float64)
    fn = _scan_pair_moment_nb if USE_NUMBA else _scan_pair_moment_src
    fn(float(two_lambda), cps, euu, logc2)
    return euu, logc2


def scan_mixed_moment(z_sum, z_cross, checkpoints):
    """``E[u_k u_l](n)`` at each checkpoint (start with one ball of type 0)."""
    cps = _as_checkpoints(checkpoints)
    out = np.empty(cps.shape[0], dtype=np.complex128)
    fn = _scan_mixed_nb if USE_NUMBA else _scan_mixed_src
    fn(complex(z_sum), complex(z_cross), cps, out)
    return out


def scan_cn(z, checkpoints):
    """``c_n(z) = prod_{s<=n} (1 + z/s)`` at each checkpoint (linear scale)."""
    cps = _as_checkpoints(checkpoints)
    out = np.empty(cps.shape[0], dtype=np.complex128)
    fn = _scan_cn_nb if USE_NUMBA else _scan_cn_src
    fn(complex(z), cps, out)
    return out


def scan_log_ratio(z, checkpoints):
    """Log-polar ``c_n(z)`` at each checkpoint: (logmod, phase, zero_flag)."""
    cps = _as_checkpoints(checkpoints)
    z = complex(z)
    n = cps.shape[0]
    logmod = np.empty(n, dtype=np.float64)
    phase = np.empty(n, dtype=np.float64)
    zero = np.empty(n, dtype=np.bool_)
    fn = _scan_log_ratio_nb if USE_NUMBA else _scan_log_ratio_src
    fn(z.real, z.imag, cps, logmod, phase, zero)
    return logmod, phase, zero
