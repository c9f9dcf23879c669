"""Exact Dirichlet-series coefficient algebra.

Sequences here are the coefficients of the factors of

    F(s) = L(s, chi) P(s) / zeta(ks)                     (k even)
    F(s) = L(s, chi) P(s) / (L(ks, chi) P(ks))           (k odd)

with P(s) = prod_{p | q} (1 - p^-s)^-1:

* ``nu``    coefficients of 1/zeta(ks): mu(d) at n = d^k
* ``psi``   coefficients of 1/L(ks, chi): mu(d) chi(d) at n = d^k
* ``1_N``   coefficients of P(s): indicator of the q-core integers
* ``h``     = nu * 1_N, coefficients of P(s)/zeta(ks)
* ``htilde``= psi * (nu 1_N) * 1_N, coefficients of P(s)/(L(ks,chi) P(ks))

A non-default sign s = -1 at the primes dividing q replaces 1_N by
s^Omega(n) 1_N(n) throughout (the q-core factor becomes prod (1 + p^-s)^-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .characters import ModifiedCharacter, QuadraticCharacter, f_values
from .errors import CapacityError, ValidationError
from .sequences import CoefficientSequence
from .sieves import SieveTable, as_kfree, build_sieve, integer_root, small_mobius


def in_q_core(n: int, q: int) -> bool:
    """True when every prime factor of n divides q (repeated gcd stripping)."""
    n = int(n)
    if n < 1:
        return False
    while n > 1:
        g = math.gcd(n, q)
        if g == 1:
            return False
        n //= g
    return True


def _bad_primes(q: int) -> list[int]:
    out, m, d = [], q, 2
    while d * d <= m:
        if m % d == 0:
            out.append(d)
            while m % d == 0:
                m //= d
        d += 1
    if m > 1:
        out.append(m)
    return out


@dataclass(frozen=True, eq=False)
class QCoreSet:
    """The q-core integers {n <= N : p | n implies p | q}, stored ascending."""

    q: int
    limit: int
    members: np.ndarray
    omegas: np.ndarray  # Omega(n) (with multiplicity) for each member

    def __contains__(self, n) -> bool:
        return in_q_core(n, self.q)

    def __len__(self) -> int:
        return int(self.members.size)

    def indicator(self, sign: int = 1) -> CoefficientSequence:
        """sign^Omega(n) on members, as a sparse sequence."""
        vals = np.ones(self.members.size, dtype=np.int64)
        if sign == -1:
            vals = np.where(self.omegas % 2 == 1, -1, 1).astype(np.int64)
        return CoefficientSequence.from_sparse(self.limit, self.members, vals, name=f"1_N(q={self.q})")


def q_core(q: int, N: int) -> QCoreSet:
    """Enumerate the q-core integers up to N by depth-first search over prime powers."""
    q, N = int(q), int(N)
    if q < 1 or N < 1:
        raise ValidationError(f"q_core needs q >= 1 and N >= 1 (got q={q}, N={N})")
    primes = _bad_primes(q)
    found: list[tuple[int, int]] = []

    def walk(n: int, i: int, om: int):
        if i == len(primes):
            found.append((n, om))
            return
        p = primes[i]
        e = 0
        while n <= N:
            walk(n, i + 1, om + e)
            n *= p
            e += 1

    walk(1, 0, 0)
    found.sort()
    return QCoreSet(q=q, limit=N,
                    members=np.array([n for n, _ in found], dtype=np.int64),
                    omegas=np.array([o for _, o in found], dtype=np.int64))


def delta(N: int) -> CoefficientSequence:
    """The convolution identity: 1 at n = 1, else 0."""
    return CoefficientSequence.from_sparse(N, [1], [1], name="delta")


def ones(N: int) -> CoefficientSequence:
    arr = np.ones(N + 1, dtype=np.int64)
    arr[0] = 0
    return CoefficientSequence.from_dense(arr, name="1")


def _sparse_pairs(a: CoefficientSequence, b: CoefficientSequence):
    """All products i*j <= N over stored entries, with value products."""
    N = a.limit
    prods, vals = [], []
    bi, bv = b.indices, b.values
    for i, v in zip(a.indices.tolist(), a.values.tolist()):
        cut = np.searchsorted(bi, N // i, side="right")
        if cut == 0:
            break  # a.indices ascending, so later i only shrink N // i
        prods.append(bi[:cut] * i)
        vals.append(bv[:cut] * v)
    if not prods:
        return np.zeros(0, np.int64), np.zeros(0, np.int64)
    return np.concatenate(prods), np.concatenate(vals)


def dirichlet_convolve(a: CoefficientSequence, b: CoefficientSequence,
                       name: str = "") -> CoefficientSequence:
    """(a * b)(n) = sum_{de = n} a(d) b(e) for n <= N, exact in int64.

    sparse x sparse stays sparse: every product of stored indices is stored,
    even where the values cancel to 0. Otherwise the result is dense and is
    built by walking multiples of the sparser operand's support.
    """
    if a.limit != b.limit:
        raise ValidationError(f"cannot convolve sequences with limits {a.limit} and {b.limit}")
    N = a.limit
    name = name or f"({a.name}*{b.name})"
    if a.is_sparse and b.is_sparse:
        if a.indices.size > b.indices.size:
            a, b = b, a
        prods, vals = _sparse_pairs(a, b)
        order = np.argsort(prods, kind="stable")
        prods, vals = prods[order], vals[order]
        idx, starts = np.unique(prods, return_index=True)
        sums = np.add.reduceat(vals, starts) if idx.size else vals
        return CoefficientSequence.from_sparse(N, idx, sums, name=name)
    # walk the operand with fewer non-zeros
    sa = a.to_sparse() if not a.is_sparse else a
    sb = b.to_sparse() if not b.is_sparse else b
    if np.count_nonzero(sa.values) > np.count_nonzero(sb.values):
        sa, b = sb, a
    other = b.as_array()
    out = np.zeros(N + 1, dtype=np.int64)
    for i, v in zip(sa.indices.tolist(), sa.values.tolist()):
        if v == 0:
            continue
        m = N // i
        out[i::i] += v * other[1:m + 1]
    return CoefficientSequence.from_dense(out, name=name)


def _lookup(seq: CoefficientSequence, idx: np.ndarray) -> np.ndarray:
    """Values of a sparse sequence at the given indices (0 where absent)."""
    pos = np.searchsorted(seq.indices, idx)
    pos_c = np.minimum(pos, max(seq.indices.size - 1, 0))
    if seq.indices.size == 0:
        return np.zeros(idx.size, dtype=np.int64)
    hit = seq.indices[pos_c] == idx
    return np.where(hit, seq.values[pos_c], 0)


def pointwise_product(a: CoefficientSequence, b: CoefficientSequence, name: str = "") -> CoefficientSequence:
    if a.limit != b.limit:
        raise ValidationError(f"limits differ: {a.limit} vs {b.limit}")
    name = name or f"{a.name}.{b.name}"
    if a.is_sparse:
        bv = b.as_array()[a.indices] if not b.is_sparse else _lookup(b, a.indices)
        return CoefficientSequence.from_sparse(a.limit, a.indices, a.values * bv, name=name)
    if b.is_sparse:
        return pointwise_product(b, a, name)
    return CoefficientSequence.from_dense(a.dense * b.dense, name=name)


def nu_values(k, N: int) -> CoefficientSequence:
    """nu(d^k) = mu(d), stored on every k-th power d^k <= N (zeros included)."""
    k = as_kfree(k).k
    D = integer_root(int(N), k)
    mu = small_mobius(D)
    d = np.arange(1, D + 1, dtype=np.int64)
    return CoefficientSequence.from_sparse(N, d ** k, mu[1:D + 1], name=f"nu_k{k}")


def psi_values(k, chi: QuadraticCharacter, N: int) -> CoefficientSequence:
    """psi(d^k) = mu(d) chi(d), stored on every k-th power d^k <= N."""
    k = as_kfree(k).k
    D = integer_root(int(N), k)
    mu = small_mobius(D)
    d = np.arange(1, D + 1, dtype=np.int64)
    vals = mu[1:D + 1] * chi.periodic(D)[1:D + 1]
    return CoefficientSequence.from_sparse(N, d ** k, vals, name=f"psi_k{k}_{chi.label}")


def h_coefficients(k, core: QCoreSet, N: int | None = None, sign: int = 1) -> CoefficientSequence:
    """h = nu * 1_N, the coefficients of P(s)/zeta(ks)."""
    N = core.limit if N is None else int(N)
    if N != core.limit:
        core = q_core(core.q, N)
    k = as_kfree(k).k
    h = dirichlet_convolve(nu_values(k, N), core.indicator(sign), name=f"h_k{k}_q{core.q}")
    return h


def htilde_coefficients(k, chi: QuadraticCharacter, core: QCoreSet, N: int | None = None,
                        sign: int = 1) -> CoefficientSequence:
    """htilde = psi * (nu 1_N) * 1_N, the coefficients of P(s)/(L(ks,chi) P(ks))."""
    N = core.limit if N is None else int(N)
    if N != core.limit:
        core = q_core(core.q, N)
    if core.q != chi.modulus:
        raise ValidationError(f"q-core built for q={core.q} but character has modulus {chi.modulus}")
    k = as_kfree(k).k
    ind = core.indicator(sign)
    # nu restricted to N: d^k with d in the core; its sign twist is sign^(k Omega(d)) = sign^Omega(d^k)
    nu_core = pointwise_product(nu_values(k, N), ind, name="nu.1_N")
    inner = dirichlet_convolve(nu_core, ind)
    return dirichlet_convolve(psi_values(k, chi, N), inner, name=f"htilde_k{k}_q{core.q}")


def sum_abs(a: CoefficientSequence, x) -> int:
    """sum_{n <= x} |a(n)|."""
    x = int(math.floor(x))
    if x > a.limit:
        raise CapacityError(f"x={x} exceeds sequence limit {a.limit}")
    if x < 1:
        return 0
    if a.is_sparse:
        cut = np.searchsorted(a.indices, x, side="right")
        return int(np.abs(a.values[:cut]).sum())
    return int(np.abs(a.dense[1:x + 1]).sum())


def cumulative_abs(a: CoefficientSequence, xs) -> np.ndarray:
    """sum_abs at many x at once (sparse-friendly)."""
    s = a.to_sparse()
    csum = np.concatenate([[0], np.cumsum(np.abs(s.values))])
    cut = np.searchsorted(s.indices, np.floor(np.asarray(xs, dtype=float)).astype(np.int64), side="right")
    return csum[cut]


@dataclass(frozen=True)
class IdentityReport:
    k: int
    modulus: int
    N: int
    ok: bool
    first_mismatch: int | None = None
    lhs: int | None = None
    rhs: int | None = None
    form: str = ""

    def summary(self) -> str:
        if self.ok:
            return f"identity holds to {self.N}"
        return f"identity fails at n={self.first_mismatch}: f={self.lhs}, ({self.form})={self.rhs}"


def factor_coefficients(k, chi: QuadraticCharacter, N: int, sign: int = 1) -> CoefficientSequence:
    """h (k even) or htilde (k odd) up to N."""
    k = as_kfree(k)
    core = q_core(chi.modulus, N)
    if k.even:
        return h_coefficients(k, core, N, sign=sign)
    return htilde_coefficients(k, chi, core, N, sign=sign)


def verify_factorization(k, chi: QuadraticCharacter, g: ModifiedCharacter, N: int,
                         table: SieveTable | None = None) -> IdentityReport:
    """Check f = chi * h (k even) or f = chi * htilde (k odd) for every n <= N."""
    k = as_kfree(k)
    if g.base != chi:
        raise ValidationError("modified character must be built on the same chi")
    table = table if table is not None and table.limit >= N else build_sieve(N)
    f = f_values(k, g, table, N)
    coeffs = factor_coefficients(k, chi, N, sign=g.sign_at_bad_primes)
    rhs = dirichlet_convolve(coeffs, chi.sequence(N))
    bad = f.first_mismatch(rhs)
    form = "chi*h" if k.even else "chi*htilde"
    if bad is None:
        return IdentityReport(k.k, chi.modulus, N, True, form=form)
    return IdentityReport(k.k, chi.modulus, N, False, bad, f[bad], rhs[bad], form=form)
