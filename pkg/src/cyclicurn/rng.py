"""Reproducible 64-bit random number generation.

The package uses SplitMix64 everywhere: the state advances by a fixed odd
constant (a Weyl sequence) and each output is a finalizing bijective mix of
the state.  The algorithm is fully specified by the three constants below,
so trajectories are reproducible bit-for-bit across platforms and across the
numba / pure-python backends.

Replicate streams are derived from ``(master_seed, replicate_index)`` with
:func:`stream_seed`; distinct indices land in well-separated regions of the
Weyl sequence, which is the standard way to run embarrassingly parallel
Monte Carlo with one logical seed.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15  # Weyl increment, 2^64 / phi rounded to odd
MIX_A = 0xBF58476D1CE4E5B9
MIX_B = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective avalanche mix of a 64-bit word."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * MIX_A) & MASK64
    x = ((x ^ (x >> 27)) * MIX_B) & MASK64
    return x ^ (x >> 31)


def stream_seed(master_seed: int, index: int) -> int:
    """Seed for replicate ``index`` derived from one master seed."""
    return mix64((master_seed + (index + 1) * GOLDEN) & MASK64)


class SplitMix64:
    """Sequential SplitMix64 generator over python integers.

    This is the reference implementation; the numba kernels inline the same
    arithmetic on ``uint64`` and are tested to produce identical streams.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)

    def next_below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)``.

        Lemire's multiply-shift reduction: take the high 64 bits of
        ``x * bound``; the rare low-word rejection keeps it exactly unbiased.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        p = self.next_u64() * bound
        lo = p & MASK64
        if lo < bound:  # taken with probability < bound / 2**64
            t = (MASK64 - bound + 1) % bound  # == 2**64 mod bound
            while lo < t:
                p = self.next_u64() * bound
                lo = p & MASK64
        return p >> 64

    def next_unit(self) -> float:
        """Uniform float in the open interval (0, 1), 53-bit resolution."""
        return ((self.next_u64() >> 11) + 0.5) * 2.0 ** -53
