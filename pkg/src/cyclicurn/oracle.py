"""Brute-force ground truth at small n.

The exact law of the composition vector is built by forward dynamic
programming over the composition lattice, optionally in rational arithmetic
so identities hold exactly.  The module also carries the binary search tree
embedding as an alternate simulator and the exact checks of the initial-type
shift relation and of the subtree decomposition of the law.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
from scipy.stats import chi2 as _chi2

from . import _kernels
from .errors import ParameterError, ResourceGuardError
from .rng import SplitMix64
from .spectral import phase_table
from .urn_core import Composition, UrnParams, new_urn

# exact_distribution refuses lattices with more points than this
SIZE_GUARD = 10 ** 7


@dataclass(frozen=True)
class ExactDist:
    """Exact pmf of the composition vector at step n, keyed by count tuples."""

    m: int
    n: int
    initial_type: int
    pmf: dict
    exact: bool = False

    def support(self) -> np.ndarray:
        return np.array(sorted(self.pmf), dtype=np.int64)

    def probabilities(self, keys) -> np.ndarray:
        return np.array([float(self.pmf[tuple(k)]) for k in keys])


def _guard(m: int, n: int) -> None:
    if math.comb(n + m, m - 1) > SIZE_GUARD:
        raise ResourceGuardError(
            f"composition lattice for m={m}, n={n} exceeds the size guard "
            f"({math.comb(n + m, m - 1)} > {SIZE_GUARD})")


def exact_distribution(m: int, initial_type: int, n: int, exact: bool = False) -> ExactDist:
    """Forward DP: each state donates mass counts[i]/(n+1) to its successors."""
    params = UrnParams(m=m, initial_type=initial_type)  # validates m, j
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    _guard(m, n)
    one = Fraction(1) if exact else 1.0
    layer = {new_urn(params).counts: one}
    for step_n in range(n):
        total = step_n + 1
        nxt: dict = {}
        for counts, p in layer.items():
            for i in range(m):
                c = counts[i]
                if c == 0:
                    continue
                j = (i + 1) % m
                key = counts[:j] + (counts[j] + 1,) + counts[j + 1:]
                w = (Fraction(c, total) if exact else c / total) * p
                if key in nxt:
                    nxt[key] += w
                else:
                    nxt[key] = w
        layer = nxt
    return ExactDist(m=m, n=n, initial_type=initial_type, pmf=layer, exact=exact)


def dist_moments(dist: ExactDist) -> SimpleNamespace:
    """Exact mean, covariance, and coordinate moments of an ExactDist.

    ``u_mean[k] = E[u_k(R_n)]`` and ``u_mixed[k, l] = E[u_k(R_n) u_l(R_n)]``
    are the quantities cross-validated against the closed forms.
    """
    keys = dist.support()
    p = dist.probabilities(keys)
    x = keys.astype(np.float64)
    mean = p @ x
    centered = x - mean
    cov = np.einsum("s,si,sj->ij", p, centered, centered, optimize=False)
    u = x @ phase_table(dist.m)  # u[s, k] = u_k of support point s
    u_mean = p @ u
    u_mixed = (u * p[:, None]).T @ u
    return SimpleNamespace(mean=mean, cov=cov, u_mean=u_mean, u_mixed=u_mixed)


def _rolled(key: tuple, j: int, m: int) -> tuple:
    # pushforward of counts under j applications of the transposed
    # replacement matrix (cyclic shift by j)
    return tuple(key[(i - j) % m] for i in range(m))


def shift_check(m: int, j: int, n: int, exact: bool = False):
    """Law of the urn started at type j vs the shifted law started at type 0.

    Returns ``(equal, max_deviation)``; the identity is exact, so in rational
    mode the deviation is exactly zero.
    """
    j %= m
    base = exact_distribution(m, 0, n, exact=exact)
    shifted = exact_distribution(m, j, n, exact=exact)
    pushed = {_rolled(key, j, m): p for key, p in base.pmf.items()}
    all_keys = set(pushed) | set(shifted.pmf)
    zero = Fraction(0) if exact else 0.0
    dev = max(abs(pushed.get(k, zero) - shifted.pmf.get(k, zero)) for k in all_keys)
    return dev == 0 if exact else dev < 1e-12, float(dev)


def recurrence_check(m: int, n: int, exact: bool = False) -> float:
    """Total variation gap in the subtree decomposition of the law.

    The left subtree of the root has uniform size I on {0, ..., n-1}; the law
    of R_n must equal the I-mixture of the convolution of an independent copy
    at size I with a shifted independent copy at size n-1-I.  The gap is zero
    (up to rounding in double mode).
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    layers = [exact_distribution(m, 0, i, exact=exact) for i in range(n + 1)]
    lhs = layers[n].pmf
    weight = Fraction(1, n) if exact else 1.0 / n
    rhs: dict = {}
    for i in range(n):
        left = layers[i].pmf
        right = layers[n - 1 - i].pmf
        for ck, pk in left.items():
            for cl, pl in right.items():
                key = tuple(a + b for a, b in zip(ck, _rolled(cl, 1, m)))
                w = weight * pk * pl
                if key in rhs:
                    rhs[key] += w
                else:
                    rhs[key] = w
    zero = Fraction(0) if exact else 0.0
    tv = sum(abs(lhs.get(k, zero) - rhs.get(k, zero)) for k in set(lhs) | set(rhs)) / 2
    return float(tv)


@dataclass
class BstNode:
    """Node of the embedding tree; external nodes carry the ball types."""

    label: int
    left: "BstNode | None" = None
    right: "BstNode | None" = None
    external: bool = True


def bst_tree(m: int, n: int, seed: int) -> BstNode:
    """Grow the random binary search tree with labelled external nodes.

    Uniform external node replacement; the new left child keeps the parent's
    label, the right child gets label + 1 mod m.  Same draw sequence as
    :func:`bst_simulate` for the same seed.
    """
    root = BstNode(label=0)
    externals = [root]
    rng = SplitMix64(seed)
    for _ in range(n):
        idx = rng.next_below(len(externals))
        node = externals[idx]
        node.external = False
        node.left = BstNode(label=node.label)
        node.right = BstNode(label=(node.label + 1) % m)
        externals[idx] = node.left
        externals.append(node.right)
    return root


def leaf_counts(root: BstNode, m: int) -> np.ndarray:
    counts = np.zeros(m, dtype=np.int64)
    stack = [root]
    while stack:
        node = stack.pop()
        if node.external:
            counts[node.label] += 1
        else:
            stack.append(node.left)
            stack.append(node.right)
    return counts


def bst_simulate(m: int, n: int, seed: int) -> Composition:
    """External-node label counts of the grown tree; same law as the urn."""
    if m < 2:
        raise ParameterError(f"m must be >= 2, got {m}")
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    counts = _kernels.bst_counts_many(m, n, [seed])[0]
    return Composition(counts=tuple(int(c) for c in counts), n=n)


def law_chi_square(dist: ExactDist, counts: np.ndarray):
    """Pearson chi-square of empirical counts against an exact pmf.

    ``counts`` has shape (R, m); returns (statistic, dof, p_value).  Support
    points with expected count below 5 are pooled into one cell.
    """
    keys = [tuple(k) for k in dist.support()]
    p = dist.probabilities(keys)
    r = counts.shape[0]
    lookup = {key: i for i, key in enumerate(keys)}
    observed = np.zeros(len(keys))
    for row in counts:
        observed[lookup[tuple(int(c) for c in row)]] += 1
    expected = r * p
    main = expected >= 5.0
    obs_cells = list(observed[main])
    exp_cells = list(expected[main])
    if not main.all():
        obs_cells.append(observed[~main].sum())
        exp_cells.append(expected[~main].sum())
    obs_cells = np.array(obs_cells)
    exp_cells = np.array(exp_cells)
    stat = float(((obs_cells - exp_cells) ** 2 / exp_cells).sum())
    dof = len(exp_cells) - 1
    return stat, dof, float(_chi2.sf(stat, dof))


def dump_json(dist: ExactDist) -> str:
    """Golden-file form: composition key -> probability, keys lexicographic.

    Probabilities are rational strings in exact mode, decimal otherwise.
    """
    items = {}
    for key in sorted(dist.pmf):
        p = dist.pmf[key]
        items[",".join(str(c) for c in key)] = str(p) if dist.exact else float(p)
    return json.dumps({
        "m": dist.m,
        "n": dist.n,
        "initial_type": dist.initial_type,
        "exact": dist.exact,
        "pmf": items,
    }, indent=2)
