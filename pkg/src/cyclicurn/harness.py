"""Experiment orchestration behind the CLI.

Every run_* function takes an :class:`ExperimentConfig` and returns a report
dict of the fixed shape ``{config, results, diagnostics, version}`` plus a
list of plot-ready CSV rows.  Replicate r always draws from the RNG stream
``stream_seed(config.seed, r)``, and aggregation happens in fixed replicate
order, so reports are identical for any thread count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.integrate import quad

from . import __version__, _kernels, exact_moments, limits, oracle, residuals
from .errors import ParameterError
from .rng import SplitMix64, stream_seed
from .spectral import eigen_data, index_class, large_indices
from .urn_core import UrnParams, simulate

RNG_NAME = "splitmix64"


@dataclass
class ExperimentConfig:
    """Command-specific knobs; unused fields are ignored by a given command."""

    command: str = ""
    m: int = 7
    n: int = 10_000
    reps: int = 10_000
    seed: int = 20260810
    n_limit: int | None = None
    mode: str = "gamma_ratio"
    threads: int | None = None
    ks: tuple | None = None
    checkpoints: tuple | None = None
    m_min: int = 7
    initial_type: int = 0
    exact_rational: bool = False
    out: str | None = None
    fmt: str = "json"
    tolerances: dict = field(default_factory=dict)

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def echo(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "tolerances"}
        d["ks"] = list(self.ks) if self.ks else None
        d["checkpoints"] = list(self.checkpoints) if self.checkpoints else None
        d["tolerances"] = dict(self.tolerances)
        return d


def _mat(a: np.ndarray) -> dict:
    a = np.asarray(a)
    return {"shape": list(a.shape), "data": [float(x) for x in a.ravel(order="C")]}


def _report(cfg: ExperimentConfig, results: dict, diagnostics: dict) -> dict:
    diagnostics.setdefault("rng", RNG_NAME)
    diagnostics.setdefault("backend", _kernels.active_backend())
    return {
        "config": cfg.echo(),
        "results": results,
        "diagnostics": diagnostics,
        "version": f"cyclicurn {__version__}",
    }


@dataclass
class CovEstimate:
    """Empirical mean/covariance with per-entry standard errors and
    per-coordinate normality diagnostics (standardized skewness, excess
    kurtosis)."""

    count: int
    mean: np.ndarray
    cov: np.ndarray
    se: np.ndarray
    skewness: np.ndarray
    excess_kurtosis: np.ndarray

    @staticmethod
    def from_samples(x: np.ndarray) -> "CovEstimate":
        r = x.shape[0]
        mean = x.mean(axis=0)
        d = x - mean
        cov = np.einsum("ri,rj->ij", d, d, optimize=False) / (r - 1)
        prods = d[:, :, None] * d[:, None, :]
        se = prods.std(axis=0, ddof=1) / math.sqrt(r)
        var = d.var(axis=0)
        safe = np.where(var > 0, var, 1.0)
        skew = (d ** 3).mean(axis=0) / safe ** 1.5
        kurt = (d ** 4).mean(axis=0) / safe ** 2 - 3.0
        return CovEstimate(count=r, mean=mean, cov=cov, se=se,
                           skewness=skew, excess_kurtosis=kurt)


def _replicate_seeds(master: int, count: int, offset: int = 0) -> np.ndarray:
    return np.array([stream_seed(master, offset + r) for r in range(count)],
                    dtype=np.uint64)


def _normality(est: CovEstimate, z: float):
    skew_thr = z * math.sqrt(6.0 / est.count)
    kurt_thr = z * math.sqrt(24.0 / est.count)
    ok = (np.abs(est.skewness) <= skew_thr).all() and \
         (np.abs(est.excess_kurtosis) <= kurt_thr).all()
    return {
        "skewness": [float(v) for v in est.skewness],
        "excess_kurtosis": [float(v) for v in est.excess_kurtosis],
        "skewness_threshold": skew_thr,
        "kurtosis_threshold": kurt_thr,
        "passed": bool(ok),
    }


def _critical_direction_ratios(m: int, cov: np.ndarray) -> list:
    """Quadratic forms of the empirical covariance along the two unit
    eigendirections of the lam = 1/2 block, relative to the 1/m eigenvalue."""
    v = eigen_data(m).vectors[m // 6]
    out = []
    for d in (v.real, v.imag):
        d = d * math.sqrt(2.0 * m)  # unit vectors spanning the plane
        out.append(float(d @ cov @ d * m))
    return out


def run_clt(cfg: ExperimentConfig) -> tuple[dict, list]:
    t0 = time.perf_counter()
    m, n, r = cfg.m, cfg.n, cfg.reps
    if n < 2:
        raise ParameterError("clt needs n >= 2")
    ks = list(cfg.ks) if cfg.ks else list(range(1, m // 2 + 1))
    for k in ks:
        if not 1 <= k <= m // 2:
            raise ParameterError(f"k must be in 1..{m // 2}, got {k}")
    cps = sorted(cfg.checkpoints) if cfg.checkpoints else [n, 2 * n, 4 * n]
    large = [k for k in ks if index_class(m, k) == "large"]
    n_limit = cfg.n_limit if cfg.n_limit else (64 * n if large else max(cps))
    n_limit = max(n_limit, max(cps))
    threads = _kernels.set_threads(cfg.threads)
    tol_z = cfg.tol("z", 4.0)
    tol_critical = cfg.tol("critical_rel", 0.15)

    all_cps = sorted(set(cps) | {n_limit})
    seeds = _replicate_seeds(cfg.seed, r)
    sim_t0 = time.perf_counter()
    u_all, _ = _kernels.sim_u_many(m, cfg.initial_type, all_cps, seeds)
    sim_seconds = time.perf_counter() - sim_t0
    at = {c: i for i, c in enumerate(all_cps)}

    xi = {k: residuals.xi_batch(u_all[:, at[n_limit], k], n_limit, m, k)
          for k in large}

    csv_rows = []
    blocks = []
    x_main = {}
    x_by_cp = {k: {} for k in ks}
    all_pass = True
    for k in ks:
        cls = index_class(m, k)
        theory = limits.sigma_k(m, k)
        theory_scale = float(np.abs(theory).max())
        cp_entries = []
        for c in cps:
            x = residuals.x_statistic_batch(u_all[:, at[c], k], c, m, k,
                                            cfg.mode, xi.get(k))
            x_by_cp[k][c] = x
            if c == cps[0]:
                x_main[k] = x
            est = CovEstimate.from_samples(x)
            se = np.maximum(est.se, 1e-300)
            z = (est.cov - theory) / se
            max_z = float(np.abs(z).max())
            normality = _normality(est, tol_z)
            entry = {
                "n": c,
                "cov": _mat(est.cov),
                "theory": _mat(theory),
                "se": _mat(est.se),
                "max_abs_z": max_z,
                "trace_ratio": float(np.trace(est.cov) / np.trace(theory)),
                "normality": normality,
            }
            if cls == "large":
                budget = (c / n_limit) ** (float(eigen_data(m).lam[k]) - 0.5)
                entry["bias_budget"] = float(budget)
                dev = np.abs(est.cov - theory)
                entry["passed"] = bool(
                    (dev <= tol_z * se + budget * theory_scale).all())
            elif cls == "critical":
                ratios = _critical_direction_ratios(m, est.cov)
                entry["eigendirection_ratios"] = ratios
                entry["passed"] = bool(
                    max(abs(q - 1.0) for q in ratios) <= tol_critical)
            else:
                entry["passed"] = bool(max_z <= tol_z and normality["passed"])
            cp_entries.append(entry)
            for i in range(m):
                for j in range(m):
                    csv_rows.append({
                        "k": k, "n": c, "i": i, "j": j,
                        "cov": float(est.cov[i, j]),
                        "theory": float(theory[i, j]),
                        "se": float(est.se[i, j]),
                    })
        block = {"k": k, "class": cls, "checkpoints": cp_entries}
        if cls == "large":
            # gamma-ratio vs pure-phase normalization gap, must shrink in n
            gaps = {}
            for c in (cps[0], cps[-1]):
                other = "power_phase" if cfg.mode == "gamma_ratio" else "gamma_ratio"
                x_alt = residuals.x_statistic_batch(u_all[:, at[c], k], c, m, k,
                                                    other, xi.get(k))
                gaps[c] = float(np.abs(x_by_cp[k][c] - x_alt).max())
            block["mode_gap"] = {str(c): g for c, g in gaps.items()}
            block["mode_gap_shrinks"] = bool(gaps[cps[-1]] <= gaps[cps[0]]) \
                if len(cps) > 1 else None
        block["passed"] = bool(all(e["passed"] for e in cp_entries))
        all_pass &= block["passed"]
        blocks.append(block)

    cross = []
    for k, l in combinations(ks, 2):
        dk = x_main[k] - x_main[k].mean(axis=0)
        dl = x_main[l] - x_main[l].mean(axis=0)
        cov_kl = np.einsum("ri,rj->ij", dk, dl, optimize=False) / (r - 1)
        sk = np.sqrt(np.maximum(dk.var(axis=0, ddof=1), 1e-300))
        sl = np.sqrt(np.maximum(dl.var(axis=0, ddof=1), 1e-300))
        corr = cov_kl / np.outer(sk, sl)
        max_corr = float(np.abs(corr).max())
        z = max_corr * math.sqrt(r)
        ok = bool(z <= tol_z)
        cross.append({"k": k, "l": l, "max_abs_corr": max_corr,
                      "z": z, "passed": ok})
        all_pass &= ok

    combined = None
    if m >= 7 and set(ks) == set(range(1, m // 2 + 1)):
        theory = limits.sigma_total(m)
        per_cp = []
        for c in cps:
            if m % 6 == 0:
                s = x_by_cp[m // 6][c].copy()
                damp = 1.0 / math.sqrt(math.log(c))
                for k in ks:
                    if k != m // 6:
                        s += damp * x_by_cp[k][c]
            else:
                s = sum(x_by_cp[k][c] for k in ks)
            est = CovEstimate.from_samples(s)
            z = (est.cov - theory) / np.maximum(est.se, 1e-300)
            per_cp.append({"n": c, "cov": _mat(est.cov), "theory": _mat(theory),
                           "max_abs_z": float(np.abs(z).max()),
                           "trace_ratio": float(np.trace(est.cov) / np.trace(theory))})
        combined = {"checkpoints": per_cp}

    wall = time.perf_counter() - t0
    results = {"blocks": blocks, "cross_correlation": cross,
               "combined": combined, "passed": bool(all_pass)}
    diagnostics = {
        "wall_seconds": wall,
        "sim_seconds": sim_seconds,
        "replicates_per_second": r / sim_seconds if sim_seconds > 0 else None,
        "threads": threads,
        "n_limit": n_limit,
        "tolerances": {"z": tol_z, "critical_rel": tol_critical},
    }
    return _report(cfg, results, diagnostics), csv_rows


def run_rate(cfg: ExperimentConfig) -> tuple[dict, list]:
    t0 = time.perf_counter()
    m = cfg.m
    n_max = cfg.n
    n_limit = cfg.n_limit if cfg.n_limit else 100 * n_max
    tol_rate = cfg.tol("rate", 0.10)
    tol_critical = cfg.tol("critical_rel", 0.15)
    ks = list(cfg.ks) if cfg.ks else [k for k in large_indices(m) if k <= m // 2]
    grid = []
    c = n_max
    while c >= 100 and len(grid) < 12:
        grid.append(c)
        c //= 2
    grid = sorted(grid)

    csv_rows = []
    rate_blocks = []
    all_pass = True
    for k in ks:
        if index_class(m, k) != "large":
            raise ParameterError(f"rate targets need lam_k > 1/2, got k={k}")
        rows = [exact_moments.residual_l2(nn, m, k, n_limit) for nn in grid]
        monotone = all(rows[i].value >= rows[i + 1].value - 1e-12
                       for i in range(len(rows) - 1))
        final = rows[-1]
        ok = abs(final.normalized - 1.0) <= tol_rate and monotone
        rate_blocks.append({
            "k": k,
            "grid": [{"n": rr.n, "value": rr.value, "normalized": rr.normalized,
                      "raw_truncated": rr.raw_truncated} for rr in rows],
            "xi_second_moment": final.xi_second_moment,
            "extrapolation": final.model,
            "monotone": bool(monotone),
            "passed": bool(ok),
        })
        all_pass &= ok
        for rr in rows:
            csv_rows.append({"k": k, "n": rr.n, "normalized": rr.normalized,
                             "value": rr.value})

    # Cov(Pi) scale: trace(Cov(Pi_{n,k})) ~ n/|2 lam - 1|, or n log n at lam = 1/2
    pi_blocks = []
    ev = eigen_data(m)
    for k in range(1, m // 2 + 1):
        cls = index_class(m, k)
        ratios = []
        for nn in grid:
            if cls == "large":
                res = exact_moments.residual_l2(nn, m, k, n_limit)
                g = exact_moments.growth_factor_grid([nn], m, k)[0]
                scalar_sq = abs(g) ** 2 * res.value
                target = nn / abs(2.0 * ev.lam[k] - 1.0)
            elif cls == "critical":
                euu, logc2 = _kernels.scan_pair_moment(2.0 * float(ev.lam[k]), [nn])
                scalar_sq = float(euu[0] - np.exp(logc2[0]))
                target = nn * math.log(nn)
            else:
                euu, logc2 = _kernels.scan_pair_moment(2.0 * float(ev.lam[k]), [nn])
                scalar_sq = float(euu[0] - np.exp(logc2[0]))
                target = nn / abs(2.0 * ev.lam[k] - 1.0)
            ratios.append(scalar_sq / target)
            csv_rows.append({"k": k, "n": nn, "pi_trace_ratio": ratios[-1]})
        entry = {"k": k, "class": cls, "grid_n": grid, "trace_ratio": ratios}
        if cls == "critical":
            checked = grid[-1] >= 10 ** 6
            entry["checked"] = checked
            entry["passed"] = bool(abs(ratios[-1] - 1.0) <= tol_critical) \
                if checked else None
        else:
            entry["passed"] = bool(abs(ratios[-1] - 1.0) <= tol_rate)
        if entry["passed"] is False:
            all_pass = False
        pi_blocks.append(entry)

    results = {"residual_rate": rate_blocks, "pi_covariance_scale": pi_blocks,
               "passed": bool(all_pass)}
    diagnostics = {"wall_seconds": time.perf_counter() - t0, "n_limit": n_limit,
                   "tolerances": {"rate": tol_rate, "critical_rel": tol_critical}}
    return _report(cfg, results, diagnostics), csv_rows


def run_rank(cfg: ExperimentConfig) -> tuple[dict, list]:
    t0 = time.perf_counter()
    tol = cfg.tol("rank", 1e-9)
    rows = []
    csv_rows = []
    all_pass = True
    for m in range(cfg.m_min, cfg.m + 1):
        sigma = limits.sigma_total(m)
        rank = limits.numerical_rank(sigma, tol)
        expected = 2 if m % 6 == 0 else m - 1
        entry = {"m": m, "rank": rank, "expected": expected,
                 "passed": bool(rank == expected)}
        if m % 6 == 0:
            proj = m * sigma
            entry["idempotence_residual"] = float(
                np.abs(proj @ proj - proj).max())
            entry["passed"] = bool(entry["passed"]
                                   and entry["idempotence_residual"] < 1e-10)
            eig = np.linalg.eigvalsh(sigma)
            entry["top_eigenvalues"] = [float(v) for v in eig[-3:]]
        all_pass &= entry["passed"]
        rows.append(entry)
        csv_rows.append({"m": m, "rank": rank, "expected": expected})
    results = {"ranks": rows, "passed": bool(all_pass)}
    diagnostics = {"wall_seconds": time.perf_counter() - t0,
                   "tolerances": {"rank": tol}}
    return _report(cfg, results, diagnostics), csv_rows


def _moment_functionals(z: np.ndarray) -> dict:
    return {
        "mean_re": z.real,
        "mean_im": z.imag,
        "second_re": (z * z).real,
        "second_im": (z * z).imag,
        "abs_second": np.abs(z) ** 2,
        "abs_fourth": np.abs(z) ** 4,
    }


def run_fixpoint(cfg: ExperimentConfig) -> tuple[dict, list]:
    t0 = time.perf_counter()
    m = cfg.m
    k = list(cfg.ks)[0] if cfg.ks else 1
    r = cfg.reps
    n_limit = cfg.n_limit if cfg.n_limit else 10 ** 5
    tol_z = cfg.tol("z", 4.0)
    threads = _kernels.set_threads(cfg.threads)

    # three independent batches: the Xi sample and the two fixed-point inputs
    sim_t0 = time.perf_counter()
    batches = []
    for b in range(3):
        seeds = _replicate_seeds(cfg.seed, r, offset=b * r)
        u, _ = _kernels.sim_u_many(m, cfg.initial_type, [n_limit], seeds)
        batches.append(residuals.xi_batch(u[:, 0, k], n_limit, m, k))
    sim_seconds = time.perf_counter() - sim_t0
    xi_sample, xi0, xi1 = batches
    u_rng = SplitMix64(stream_seed(cfg.seed, 3 * r))
    uniforms = np.array([u_rng.next_unit() for _ in range(r)])
    rhs = limits.fixpoint_rhs(xi0, xi1, uniforms, m, k)

    fa = _moment_functionals(xi_sample)
    fb = _moment_functionals(rhs)
    comparisons = []
    all_pass = True
    for name in fa:
        a, b = fa[name], fb[name]
        se = math.sqrt(a.var(ddof=1) / r + b.var(ddof=1) / r)
        z = abs(float(a.mean() - b.mean())) / se if se > 0 else 0.0
        ok = bool(z <= tol_z)
        comparisons.append({"moment": name, "xi": float(a.mean()),
                            "rhs": float(b.mean()), "z": z, "passed": ok})
        all_pass &= ok

    g_integral = complex(
        quad(lambda t: limits.g_k(t, m, k).real, 0.0, 1.0, epsabs=1e-12)[0],
        quad(lambda t: limits.g_k(t, m, k).imag, 0.0, 1.0, epsabs=1e-12)[0])
    g_ok = abs(g_integral) <= cfg.tol("g_quadrature", 1e-10)
    all_pass &= g_ok

    results = {
        "k": k,
        "moments": comparisons,
        "g_integral": [g_integral.real, g_integral.imag],
        "g_integral_passed": bool(g_ok),
        "xi_bias_scale": float(n_limit) ** (0.5 - float(eigen_data(m).lam[k])),
        "passed": bool(all_pass),
    }
    csv_rows = [{"moment": c["moment"], "xi": c["xi"], "rhs": c["rhs"],
                 "z": c["z"]} for c in comparisons]
    diagnostics = {"wall_seconds": time.perf_counter() - t0,
                   "sim_seconds": sim_seconds,
                   "replicates_per_second": 3 * r / sim_seconds if sim_seconds else None,
                   "threads": threads, "n_limit": n_limit,
                   "tolerances": {"z": tol_z}}
    return _report(cfg, results, diagnostics), csv_rows


def run_oracle(cfg: ExperimentConfig) -> tuple[dict, list]:
    t0 = time.perf_counter()
    m_max = cfg.m
    n_max = cfg.n
    exact = cfg.exact_rational
    csv_rows = []

    moment_dev = 0.0
    for m in range(2, m_max + 1):
        for n in range(0, n_max + 1):
            dist = oracle.exact_distribution(m, 0, n)
            mom = oracle.dist_moments(dist)
            mean_dev = float(np.abs(
                mom.mean - exact_moments.mean_vector(n, m)).max())
            u_dev = float(np.abs(mom.u_mean - np.array(
                [exact_moments.mean_u(n, m, k) for k in range(m)])).max())
            table = exact_moments.MomentTable(m, n).mixed
            mixed_dev = float(np.abs(mom.u_mixed - table).max())
            moment_dev = max(moment_dev, mean_dev, u_dev, mixed_dev)
            csv_rows.append({"check": "moments", "m": m, "n": n,
                             "deviation": max(mean_dev, u_dev, mixed_dev)})

    mart_dev = 0.0
    for m in range(2, min(m_max, 6) + 1):
        dev = oracle_martingale_deviation(m, min(n_max, 6))
        mart_dev = max(mart_dev, dev)
        csv_rows.append({"check": "martingale", "m": m, "deviation": dev})

    shift_dev, shift_exact_ok = 0.0, True
    rec_dev = 0.0
    for m in range(2, min(m_max, 7) + 1):
        n = min(n_max, 6)
        for j in range(m):
            ok, dev = oracle.shift_check(m, j, n, exact=exact)
            shift_exact_ok &= ok
            shift_dev = max(shift_dev, dev)
        rec_dev = max(rec_dev, oracle.recurrence_check(m, n, exact=exact))
    csv_rows.append({"check": "shift", "deviation": shift_dev})
    csv_rows.append({"check": "recurrence", "deviation": rec_dev})

    bst_m, bst_n = min(m_max, 3), 4
    reps = cfg.reps
    seeds = _replicate_seeds(cfg.seed, reps)
    counts = _kernels.bst_counts_many(bst_m, bst_n, seeds)
    dist = oracle.exact_distribution(bst_m, 0, bst_n)
    stat, dof, pvalue = oracle.law_chi_square(dist, counts)
    csv_rows.append({"check": "bst_law", "chi2": stat, "dof": dof, "p": pvalue})

    tol = cfg.tol("oracle", 1e-10)
    p_floor = cfg.tol("chi2_p", 1e-3)
    passed = (moment_dev < tol and mart_dev < 1e-12 and shift_dev < 1e-12
              and rec_dev < 1e-12 and shift_exact_ok and pvalue > p_floor)
    results = {
        "moment_max_deviation": moment_dev,
        "martingale_max_deviation": mart_dev,
        "shift_max_deviation": shift_dev,
        "recurrence_max_tv": rec_dev,
        "bst_chi_square": {"stat": stat, "dof": dof, "p_value": pvalue,
                           "replicates": reps, "m": bst_m, "n": bst_n},
        "exact_rational": exact,
        "passed": bool(passed),
    }
    diagnostics = {"wall_seconds": time.perf_counter() - t0,
                   "tolerances": {"oracle": tol, "chi2_p": p_floor}}
    return _report(cfg, results, diagnostics), csv_rows


def oracle_martingale_deviation(m: int, n_max: int) -> float:
    """Max |E[M_{n+1,k} | state] - M_{n,k}| over all oracle states and k.

    The one-step conditional expectation is an exact enumeration over the m
    possible draws with their counts/(n+1) probabilities; the identity holds
    exactly, so the deviation is pure rounding.
    """
    from .spectral import phase_table

    table = phase_table(m)
    worst = 0.0
    for n in range(n_max):
        dist = oracle.exact_distribution(m, 0, n)
        mean_now = np.array([exact_moments.mean_u(n, m, k) for k in range(m)])
        mean_next = np.array([exact_moments.mean_u(n + 1, m, k) for k in range(m)])
        growth_now = np.empty(m, dtype=np.complex128)
        growth_next = np.empty(m, dtype=np.complex128)
        for k in range(m):
            if 2 * k == m:
                continue
            growth_now[k] = exact_moments.growth_factor(n, m, k)
            growth_next[k] = exact_moments.growth_factor(n + 1, m, k)

        def m_values(u_vec, step, mean, growth):
            out = np.empty(m, dtype=np.complex128)
            for k in range(m):
                if 2 * k == m:
                    out[k] = step * (u_vec[k] - mean[k])
                else:
                    out[k] = (u_vec[k] - mean[k]) / growth[k]
            return out

        for key in dist.pmf:
            counts = np.asarray(key, dtype=np.float64)
            u_now = counts @ table
            m_now = m_values(u_now, n, mean_now, growth_now)
            cond = np.zeros(m, dtype=np.complex128)
            for i in range(m):
                if key[i] == 0:
                    continue
                u_next = u_now + table[(i + 1) % m]
                cond += (key[i] / (n + 1)) * m_values(u_next, n + 1,
                                                      mean_next, growth_next)
            worst = max(worst, float(np.abs(cond - m_now).max()))
    return worst


def run_mean(cfg: ExperimentConfig) -> tuple[dict, list]:
    t0 = time.perf_counter()
    m = cfg.m
    if m < 7:
        raise ParameterError("the mean expansion experiment needs m >= 7")
    n_max = max(cfg.n, 400)
    grid = []
    c = 100
    while c < n_max:
        grid.append(c)
        c *= 2
    grid.append(n_max)
    means = exact_moments.mean_vector_grid(grid, m)
    ratios = []
    sum_dev = 0.0
    csv_rows = []
    for i, n in enumerate(grid):
        exp_vec = exact_moments.mean_expansion(n, m)
        ratio = float(np.linalg.norm(means[i] - exp_vec) / math.sqrt(n))
        ratios.append(ratio)
        sum_dev = max(sum_dev, abs(float(means[i].sum()) - (n + 1)))
        csv_rows.append({"n": n, "remainder_over_sqrt_n": ratio,
                         "mean_0": float(means[i][0]),
                         "expansion_0": float(exp_vec[0])})

    logs = np.log(np.array(grid, dtype=float))
    slope = float(np.polyfit(logs, np.array(ratios), 1)[0])
    norm_slope = slope * (logs[-1] - logs[0]) / np.mean(ratios)
    trend_ok = bool(norm_slope <= cfg.tol("trend", 0.10))

    # dominant oscillation: zero crossings of the drift-removed first
    # component on a dense geometric grid, log-period vs 2*pi/mu_1
    ev = eigen_data(m)
    dense = []
    c = 100.0
    while c <= n_max:
        dense.append(int(round(c)))
        c *= 1.22
    dense = sorted(set(dense))
    dm = exact_moments.mean_vector_grid(dense, m)
    series = np.array([(dm[i][0] - (n + 1) / m) / n ** float(ev.lam[1])
                       for i, n in enumerate(dense)])
    xs = np.log(np.array(dense, dtype=float))
    crossings = [xs[i] for i in range(1, len(series))
                 if series[i - 1] * series[i] < 0]
    period = None
    if len(crossings) >= 3:
        gaps = np.diff(crossings)
        period = 2.0 * float(np.median(gaps))
    expected_period = 2.0 * math.pi / float(ev.mu[1])

    results = {
        "grid": grid,
        "remainder_over_sqrt_n": ratios,
        "fit_slope": slope,
        "normalized_slope": float(norm_slope),
        "component_sum_max_deviation": sum_dev,
        "oscillation_log_period": period,
        "expected_log_period": expected_period,
        "passed": trend_ok,
    }
    diagnostics = {"wall_seconds": time.perf_counter() - t0,
                   "tolerances": {"trend": cfg.tol("trend", 0.10)}}
    return _report(cfg, results, diagnostics), csv_rows


def run_simulate(cfg: ExperimentConfig) -> tuple[dict, list]:
    t0 = time.perf_counter()
    params = UrnParams(m=cfg.m, initial_type=cfg.initial_type)
    traj = simulate(params, cfg.n, cfg.seed)
    final = traj.final()
    csv_rows = []
    if cfg.n <= 10_000:
        for comp in traj:
            row = {"n": comp.n}
            row.update({f"count_{i}": c for i, c in enumerate(comp.counts)})
            csv_rows.append(row)
    else:
        row = {"n": final.n}
        row.update({f"count_{i}": c for i, c in enumerate(final.counts)})
        csv_rows.append(row)
    results = {
        "final_counts": list(final.counts),
        "n": final.n,
        "mean": [float(x) for x in exact_moments.mean_vector(cfg.n, cfg.m,
                                                             cfg.initial_type)],
        "passed": True,
    }
    diagnostics = {"wall_seconds": time.perf_counter() - t0}
    return _report(cfg, results, diagnostics), csv_rows
