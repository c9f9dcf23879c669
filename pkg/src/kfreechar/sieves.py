"""Smallest-prime-factor sieve and the elementary arithmetic functions on it.

Conventions at n = 1: mu(1) = 1, the k-free indicator is 1 at 1, omega(1) = 0,
and 1 counts as y-smooth for every y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapacityError, DomainError, ValidationError
from .sequences import CoefficientSequence

# int32 smallest-prime-factor table: 4 bytes per entry, ~400 MB at the bound.
MAX_SIEVE_LIMIT = 10**8
DEFAULT_SEGMENT = 2**22


@dataclass(frozen=True)
class KFreeParams:
    k: int

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or isinstance(self.k, bool) or self.k < 2:
            raise ValidationError(f"k must be an integer >= 2, got {self.k!r}")

    @property
    def even(self) -> bool:
        return self.k % 2 == 0


def as_kfree(k) -> KFreeParams:
    return k if isinstance(k, KFreeParams) else KFreeParams(int(k))


@dataclass(frozen=True, eq=False)
class SieveTable:
    """Immutable smallest-prime-factor table for 2..limit.

    ``spf[n]`` is the smallest prime factor of n for n >= 2 (slots 0 and 1 hold 0).
    """

    limit: int
    spf: np.ndarray
    primes: np.ndarray

    def __post_init__(self):
        self.spf.setflags(write=False)
        self.primes.setflags(write=False)

    def check(self, N: int) -> None:
        if N > self.limit:
            raise CapacityError(f"N={N} exceeds sieve limit {self.limit}")
        if N < 1:
            raise ValidationError(f"N must be >= 1, got {N}")

    def prime_count(self, x: int) -> int:
        """pi(x) for x <= limit."""
        self.check(max(int(x), 1))
        return int(np.searchsorted(self.primes, x, side="right"))


def build_sieve(limit: int) -> SieveTable:
    """Build the smallest-prime-factor table up to ``limit`` (<= MAX_SIEVE_LIMIT)."""
    limit = int(limit)
    if limit < 1:
        raise CapacityError(f"sieve limit must be >= 1, got {limit}")
    if limit > MAX_SIEVE_LIMIT:
        raise CapacityError(
            f"sieve limit {limit} exceeds in-memory bound {MAX_SIEVE_LIMIT}; "
            "use the segmented generators for larger ranges")
    spf = np.zeros(limit + 1, dtype=np.int32)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            block = spf[p * p::p]
            block[block == 0] = p
    rest = np.flatnonzero(spf == 0)
    rest = rest[rest >= 2]
    spf[rest] = rest
    primes = rest.astype(np.int64)
    return SieveTable(limit=limit, spf=spf, primes=primes)


def _spf_recurrence(table: SieveTable, N: int, step, dtype=np.int64) -> np.ndarray:
    """Evaluate out[n] = step(p, m, out[m]) with p = spf(n), m = n // p, out[1] = 1.

    Resolved in rounds: an entry becomes computable once its cofactor is known,
    so the number of rounds is max Omega(n) <= log2(N).
    """
    out = np.zeros(N + 1, dtype=dtype)
    if N >= 1:
        out[1] = 1
    known = np.zeros(N + 1, dtype=bool)
    known[1] = True
    pending = np.arange(2, N + 1, dtype=np.int64)
    p_all = table.spf[: N + 1].astype(np.int64)
    while pending.size:
        m = pending // p_all[pending]
        ready = known[m]
        n_r, m_r = pending[ready], m[ready]
        out[n_r] = step(p_all[n_r], m_r, out[m_r])
        known[n_r] = True
        pending = pending[~ready]
    return out


def mobius_values(table: SieveTable, N: int) -> CoefficientSequence:
    table.check(N)

    def step(p, m, mu_m):
        # p = spf(n) divides m exactly when p^2 | n
        return np.where(m % p == 0, 0, -mu_m)

    mu = _spf_recurrence(table, N, step)
    mu[0] = 0
    return CoefficientSequence.from_dense(mu, name="mu")


def kfree_indicator(table: SieveTable, k, N: int) -> CoefficientSequence:
    """mu^(k)(n) for n <= N: 1 if no p^k divides n, else 0."""
    k = as_kfree(k).k
    table.check(N)
    ind = np.ones(N + 1, dtype=np.int64)
    ind[0] = 0
    for p in table.primes:
        pk = int(p) ** k
        if pk > N:
            break
        ind[pk::pk] = 0
    return CoefficientSequence.from_dense(ind, name=f"mu^({k})")


def omega(table: SieveTable, n: int) -> int:
    """Number of distinct prime factors of n (omega(1) = 0)."""
    n = int(n)
    if n <= 0:
        raise DomainError(f"omega is defined for n >= 1, got {n}")
    table.check(n)
    count, last = 0, 0
    while n > 1:
        p = int(table.spf[n])
        if p != last:
            count += 1
            last = p
        n //= p
    return count


def factorize(table: SieveTable, n: int) -> list[tuple[int, int]]:
    """Prime factorization of n <= limit as ascending (p, e) pairs."""
    table.check(n)
    out: list[tuple[int, int]] = []
    while n > 1:
        p = int(table.spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out.append((p, e))
    return out


def prime_factors(n: int) -> list[int]:
    """Distinct prime factors of an arbitrary positive integer by trial division."""
    n = int(n)
    if n < 1:
        raise DomainError(f"prime_factors needs n >= 1, got {n}")
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out


def integer_root(n: int, k: int) -> int:
    """floor(n ** (1/k)) computed exactly."""
    if n < 0:
        raise DomainError("integer_root needs n >= 0")
    if n < 2:
        return n
    r = int(round(n ** (1.0 / k)))
    while r ** k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def small_mobius(n: int) -> np.ndarray:
    """mu(0..n) by a plain prime sieve, for short ranges (e.g. d <= N^(1/k))."""
    n = max(int(n), 1)
    mu = np.ones(n + 1, dtype=np.int64)
    mu[0] = 0
    is_comp = np.zeros(n + 1, dtype=bool)
    for p in range(2, n + 1):
        if is_comp[p]:
            continue
        is_comp[2 * p::p] = True
        mu[p::p] *= -1
        mu[p * p::p * p] = 0
    return mu


def psi_smooth_count(x: int, y: int) -> int:
    """Psi(x, y): how many n <= x have every prime factor <= y (1 included)."""
    x, y = int(math.floor(x)), int(y)
    if x < 1:
        raise ValidationError(f"psi_smooth_count needs x >= 1, got {x}")
    if y < 2:
        raise ValidationError(f"psi_smooth_count needs y >= 2, got {y}")
    if y >= x:
        return x
    primes = [int(p) for p in build_sieve(y).primes]

    def count(bound: int, i: int) -> int:
        # n <= bound built from primes[0..i]
        if i == 0:
            return bound.bit_length()  # powers of 2 up to bound
        p = primes[i]
        total, pk = 0, 1
        while pk <= bound:
            total += count(bound // pk, i - 1)
            pk *= p
        return total

    # primes above x cannot occur
    top = len(primes) - 1
    while top > 0 and primes[top] > x:
        top -= 1
    return count(x, top)


def kfree_segment(k, lo: int, hi: int, small_primes: np.ndarray | None = None) -> np.ndarray:
    """k-free indicator (int8) on lo <= n < hi, sieving by p^k only."""
    k = as_kfree(k).k
    if lo < 1 or hi < lo:
        raise ValidationError(f"bad segment [{lo}, {hi})")
    if small_primes is None:
        small_primes = build_sieve(max(integer_root(hi - 1, k), 2)).primes
    ind = np.ones(hi - lo, dtype=np.int8)
    for p in small_primes:
        pk = int(p) ** k
        if pk >= hi:
            break
        first = -(-lo // pk) * pk
        ind[first - lo::pk] = 0
    return ind


def kfree_segments(k, x_max: int, segment: int = DEFAULT_SEGMENT) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (lo, indicator) blocks covering 1..x_max in fixed-width segments."""
    k = as_kfree(k).k
    primes = build_sieve(max(integer_root(int(x_max), k), 2)).primes
    lo = 1
    while lo <= x_max:
        hi = min(lo + segment, int(x_max) + 1)
        yield lo, kfree_segment(k, lo, hi, primes)
        lo = hi
