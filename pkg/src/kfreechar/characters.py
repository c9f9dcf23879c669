"""Real non-principal Dirichlet characters and their modified companions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import ValidationError
from .sequences import CoefficientSequence
from .sieves import (DEFAULT_SEGMENT, SieveTable, _spf_recurrence, as_kfree,
                     kfree_indicator, kfree_segment, build_sieve, integer_root,
                     prime_factors)


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) via quadratic reciprocity."""
    a, n = int(a), int(n)
    if n == 0:
        return 1 if abs(a) == 1 else 0
    if a % 2 == 0 and n % 2 == 0:
        return 0
    # strip factors of 2 from n using (a/2), which depends on a mod 8
    v = (n & -n).bit_length() - 1
    n >>= v
    k = 1
    if v % 2 == 1:
        k = -1 if a % 8 in (3, 5) else 1
    if n < 0:
        n = -n
        if a < 0:
            k = -k
    # now n odd and positive: Jacobi symbol (a/n)
    a %= n
    while a:
        v = (a & -a).bit_length() - 1
        a >>= v
        if v % 2 == 1 and n % 8 in (3, 5):
            k = -k
        if a % 4 == 3 and n % 4 == 3:
            k = -k
        a, n = n % a, a
    return k if n == 1 else 0


def _squarefree(m: int) -> bool:
    m = abs(m)
    d = 2
    while d * d <= m:
        if m % (d * d) == 0:
            return False
        d += 1
    return True


def fundamental_discriminant_failure(d: int) -> str | None:
    """Why d is not a fundamental discriminant, or None if it is one."""
    if d in (0, 1):
        return f"d={d} does not give a non-principal character"
    if d % 4 == 1:
        if not _squarefree(d):
            return f"d={d} is 1 mod 4 but not squarefree"
        return None
    if d % 4 == 0:
        m = d // 4
        if m % 4 not in (2, 3):
            return f"d={d} = 4m with m={m} not congruent to 2 or 3 mod 4"
        if not _squarefree(m):
            return f"d={d} = 4m with m={m} not squarefree"
        return None
    return f"d={d} is congruent to {d % 4} mod 4 (must be 0 or 1)"


@dataclass(frozen=True)
class QuadraticCharacter:
    """A real non-principal character mod q given by its values on 0..q-1."""

    modulus: int
    values: tuple[int, ...]
    discriminant: int | None = None

    def __post_init__(self):
        _check_character(self.modulus, self.values)

    def __call__(self, n: int) -> int:
        return self.values[int(n) % self.modulus]

    @property
    def bad_primes(self) -> list[int]:
        """Primes dividing the modulus."""
        return prime_factors(self.modulus)

    def periodic(self, N: int) -> np.ndarray:
        """int64 array of chi(n) for n = 0..N."""
        base = np.asarray(self.values, dtype=np.int64)
        reps = N // self.modulus + 1
        return np.tile(base, reps)[: N + 1]

    def sequence(self, N: int) -> CoefficientSequence:
        arr = self.periodic(N).copy()
        arr[0] = 0
        return CoefficientSequence.from_dense(arr, name=f"chi_{self.label}")

    def partial_sum(self, m) -> np.ndarray | int:
        """sum_{b <= m} chi(b) in O(1) per argument via periodicity (full period sums to 0)."""
        prefix = np.cumsum(np.asarray(self.values, dtype=np.int64))
        if np.ndim(m) == 0:
            m = int(m)
            return 0 if m < 1 else int(prefix[m % self.modulus])
        m = np.asarray(m, dtype=np.int64)
        return np.where(m < 1, 0, prefix[m % self.modulus])

    @property
    def label(self) -> str:
        return str(self.discriminant) if self.discriminant is not None else f"q{self.modulus}"


def _check_character(q: int, values) -> None:
    if q < 3:
        raise ValidationError(f"modulus must be >= 3 for a real non-principal character, got {q}")
    if len(values) != q:
        raise ValidationError(f"expected {q} values, got {len(values)}")
    chi = np.asarray(values, dtype=np.int64)
    bad = np.flatnonzero((chi < -1) | (chi > 1))
    if bad.size:
        raise ValidationError(f"value chi({bad[0]})={chi[bad[0]]} is not in {{-1,0,1}}")
    for a in range(q):
        if (chi[a] == 0) != (math.gcd(a, q) > 1):
            raise ValidationError(
                f"chi({a})={chi[a]} but gcd({a},{q})={math.gcd(a, q)}: zero set must be the non-units")
    b = np.arange(q)
    for a in range(1, q):
        lhs = chi[(a * b) % q]
        rhs = chi[a] * chi
        wrong = np.flatnonzero(lhs != rhs)
        if wrong.size:
            w = int(wrong[0])
            raise ValidationError(
                f"not completely multiplicative: witness (a,b)=({a},{w}), "
                f"chi(ab)={lhs[w]} != chi(a)chi(b)={rhs[w]}")
    if not np.any(chi == -1):
        raise ValidationError("character is principal: no value equals -1")
    if chi.sum() != 0:
        raise ValidationError(f"values sum to {chi.sum()} over a period, expected 0")


def character_from_discriminant(d: int) -> QuadraticCharacter:
    """The Kronecker character n -> (d/n) modulo |d| for a fundamental discriminant d."""
    d = int(d)
    why = fundamental_discriminant_failure(d)
    if why:
        raise ValidationError(f"not a fundamental discriminant: {why}")
    q = abs(d)
    return QuadraticCharacter(q, tuple(kronecker(d, n) for n in range(q)), discriminant=d)


def character_from_table(q: int, values) -> QuadraticCharacter:
    return QuadraticCharacter(int(q), tuple(int(v) for v in values))


def load_character_table(path) -> QuadraticCharacter:
    """Read a JSON list of q values chi(0), ..., chi(q-1)."""
    values = json.loads(Path(path).read_text())
    if not isinstance(values, list):
        raise ValidationError(f"{path}: expected a JSON list of character values")
    return character_from_table(len(values), values)


def parse_character(spec: str) -> QuadraticCharacter:
    """Parse ``d=<int>`` or ``table=<path>``."""
    key, sep, val = spec.partition("=")
    if not sep:
        raise ValidationError(f"character spec {spec!r} must look like d=<int> or table=<path>")
    key = key.strip()
    if key == "d":
        try:
            d = int(val)
        except ValueError:
            raise ValidationError(f"discriminant {val!r} is not an integer") from None
        return character_from_discriminant(d)
    if key == "table":
        return load_character_table(val)
    raise ValidationError(f"unknown character source {key!r}; use d=<int> or table=<path>")


@dataclass(frozen=True)
class ModifiedCharacter:
    """Completely multiplicative g with g(p) = chi(p) for p not dividing q, g(p) = sign otherwise."""

    base: QuadraticCharacter
    sign_at_bad_primes: int = 1

    def __post_init__(self):
        if self.sign_at_bad_primes not in (1, -1):
            raise ValidationError(f"sign_at_bad_primes must be +1 or -1, got {self.sign_at_bad_primes}")

    @property
    def modulus(self) -> int:
        return self.base.modulus

    def at_prime(self, p: int) -> int:
        return self.sign_at_bad_primes if self.modulus % p == 0 else self.base(p)

    def __call__(self, n: int) -> int:
        """Direct evaluation for one n (strip the bad primes, then use chi)."""
        n = int(n)
        if n < 1:
            raise ValidationError(f"g is defined on n >= 1, got {n}")
        val = 1
        for p in self.base.bad_primes:
            while n % p == 0:
                n //= p
                val *= self.sign_at_bad_primes
        return val * self.base(n)

    def segment(self, lo: int, hi: int) -> np.ndarray:
        """g(n) for lo <= n < hi as int8, without factoring.

        n = (part supported on primes dividing q) * m with gcd(m, q) = 1, so
        g(n) = sign^(number of bad prime factors) * chi(m mod q).
        """
        m = np.arange(lo, hi, dtype=np.int64)
        val = np.ones(hi - lo, dtype=np.int8)
        s = self.sign_at_bad_primes
        for p in self.base.bad_primes:
            hit = np.flatnonzero(m % p == 0)
            while hit.size:
                m[hit] //= p
                if s == -1:
                    val[hit] *= -1
                hit = hit[m[hit] % p == 0]
        chi = np.asarray(self.base.values, dtype=np.int8)
        return val * chi[m % self.modulus]


def modified_values(g: ModifiedCharacter, table: SieveTable, N: int) -> CoefficientSequence:
    """g(1..N) from the smallest-prime-factor recursion g(n) = g(p) g(n/p)."""
    table.check(N)
    q = g.modulus
    chi = np.asarray(g.base.values, dtype=np.int64)

    def step(p, m, g_m):
        gp = np.where(q % p == 0, g.sign_at_bad_primes, chi[p % q])
        return gp * g_m

    vals = _spf_recurrence(table, N, step)
    vals[0] = 0
    return CoefficientSequence.from_dense(vals, name=f"g_{g.base.label}")


def f_values(k, g: ModifiedCharacter, table: SieveTable, N: int) -> CoefficientSequence:
    """f(n) = mu^(k)(n) g(n) for n <= N."""
    k = as_kfree(k)
    ind = kfree_indicator(table, k, N).dense
    gv = modified_values(g, table, N).dense
    return CoefficientSequence.from_dense(ind * gv, name=f"f_k{k.k}_{g.base.label}")


def f_segments(k, g: ModifiedCharacter, x_max: int,
               segment: int = DEFAULT_SEGMENT) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (lo, f(lo..hi-1)) blocks covering 1..x_max in bounded memory."""
    k = as_kfree(k).k
    x_max = int(x_max)
    primes = build_sieve(max(integer_root(x_max, k), 2)).primes
    lo = 1
    while lo <= x_max:
        hi = min(lo + segment, x_max + 1)
        yield lo, kfree_segment(k, lo, hi, primes) * g.segment(lo, hi)
        lo = hi
