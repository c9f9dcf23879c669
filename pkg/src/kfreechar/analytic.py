"""Double-precision evaluation of zeta, L(s, chi), P(s), F(s), tails and
vertical-line integrals.

Hurwitz zeta uses Euler-Maclaurin summation: a direct sum of M terms, the
integral term, and ``bernoulli_order`` Bernoulli corrections. M starts at
max(50, ceil(|t|/2) + 20) and is raised until the standard remainder bound

    |R| <= 4 |(s)_{2J}| / (2 pi)^{2J} * (M + a)^{1 - sigma - 2J} / (sigma + 2J - 1)

drops below the budget's absolute target. Arrays of points are processed in
blocks; a block whose points lie on one vertical line with uniform spacing
reuses phases through a running product instead of fresh complex exponentials.

Validated region: sigma >= 0.4 and |t| <= budget.max_t (default 1000). L, F
and the tail functions refuse points outside it. Hurwitz/Riemann zeta on its
own accepts sigma >= -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .characters import QuadraticCharacter
from .coefficients import factor_coefficients
from .errors import PoleError, RegionError, ValidationError
from .sequences import CoefficientSequence
from .sieves import as_kfree, prime_factors

VALIDATED_SIGMA_MIN = 0.4
HURWITZ_SIGMA_MIN = -1.0
POLE_GUARD = 1e-6
TAIL_MARGIN = 0.05


@dataclass(frozen=True)
class EvalBudget:
    target_abs_error: float = 1e-10
    max_terms: int = 4_000_000
    bernoulli_order: int = 16
    max_t: float = 1e3

    def __post_init__(self):
        if not self.target_abs_error >= 1e-12:
            raise ValidationError(f"target_abs_error must be >= 1e-12, got {self.target_abs_error}")
        if self.bernoulli_order % 2 or not 2 <= self.bernoulli_order <= 30:
            raise ValidationError(f"bernoulli_order must be even and in [2, 30], got {self.bernoulli_order}")
        if self.max_terms < 50:
            raise ValidationError(f"max_terms must be >= 50, got {self.max_terms}")
        if not self.max_t > 0:
            raise ValidationError(f"max_t must be positive, got {self.max_t}")

    def covering(self, t_abs: float) -> EvalBudget:
        """Same budget with max_t raised to at least t_abs."""
        return self if t_abs <= self.max_t else replace(self, max_t=float(t_abs))


DEFAULT_BUDGET = EvalBudget()


@lru_cache(maxsize=None)
def bernoulli_coefficients(order: int) -> tuple[float, ...]:
    """B_{2j} / (2j)! for j = 1..order/2."""
    # Akiyama-Tanigawa
    n_max = order
    B = []
    a = [Fraction(0)] * (n_max + 1)
    for m in range(n_max + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        B.append(a[0])  # B_m with B_1 = +1/2
    return tuple(float(B[2 * j] / math.factorial(2 * j)) for j in range(1, order // 2 + 1))


def _as_points(s) -> tuple[np.ndarray, bool]:
    arr = np.asarray(s, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("evaluation points must be finite (NaN/inf rejected)")
    return arr.reshape(-1), arr.ndim == 0


def _finish(vals: np.ndarray, scalar: bool):
    return complex(vals[0]) if scalar else vals


def _check_region(s: np.ndarray, budget: EvalBudget, sigma_min: float, what: str) -> None:
    if s.size == 0:
        return
    i = int(np.argmin(s.real))
    if s.real[i] < sigma_min - 1e-15:
        raise RegionError(f"{what}: sigma={s.real[i]:.6g} below the supported minimum {sigma_min}")
    j = int(np.argmax(np.abs(s.imag)))
    if abs(s.imag[j]) > budget.max_t:
        raise RegionError(f"{what}: |t|={abs(s.imag[j]):.6g} exceeds max_t={budget.max_t:g} "
                          "(raise it with --max-t)")


def _remainder_log_bound(s_abs_terms: np.ndarray, sigma: float, Na: float, J: int) -> float:
    """log of the Euler-Maclaurin remainder bound for one point."""
    return (math.log(4.0) + float(np.sum(np.log(s_abs_terms)))
            - 2 * J * math.log(2 * math.pi)
            + (1 - sigma - 2 * J) * math.log(Na) - math.log(sigma + 2 * J - 1))


def _choose_cutoff(s_block: np.ndarray, a: float, budget: EvalBudget) -> int:
    J = budget.bernoulli_order // 2
    t_max = float(np.max(np.abs(s_block.imag)))
    M = max(50, math.ceil(t_max / 2) + 20)
    # |s + j| <= sqrt((|sigma| + j)^2 + t^2) for every point of the block
    sig = float(np.min(s_block.real))
    sig_abs = float(np.max(np.abs(s_block.real)))
    terms = np.hypot(sig_abs + np.arange(2 * J), t_max)
    terms = np.maximum(terms, 1e-300)
    log_target = math.log(budget.target_abs_error)
    while _remainder_log_bound(terms, sig, M + a, J) > log_target:
        M = math.ceil(M * 1.25)
        if M > budget.max_terms:
            raise RegionError(f"Euler-Maclaurin cutoff would exceed max_terms={budget.max_terms} "
                              f"at |t|={t_max:.4g}; loosen the budget")
    return M


def _uniform_line(s_block: np.ndarray) -> float | None:
    """Spacing if the block lies on one vertical line with uniform steps, else None."""
    if s_block.size < 8 or np.ptp(s_block.real) != 0:
        return None
    d = np.diff(s_block.imag)
    dt = float(d[0])
    if dt <= 0 or np.max(np.abs(d - dt)) > 1e-9 * max(1.0, dt):
        return None
    return dt


def _direct_sum(s_block: np.ndarray, a: float, M: int) -> np.ndarray:
    """sum_{n < M} (n + a)^-s for every point of the block."""
    logs = np.log(np.arange(M, dtype=np.float64) + a)
    dt = _uniform_line(s_block)
    if dt is not None:
        sigma, t0 = float(s_block[0].real), float(s_block[0].imag)
        base = np.exp(-sigma * logs - 1j * t0 * logs)
        step = np.exp(-1j * dt * logs)
        powers = np.empty((s_block.size, M), dtype=np.complex128)
        powers[0] = base
        powers[1:] = step
        np.cumprod(powers, axis=0, out=powers)
        return powers.sum(axis=1)
    out = np.empty(s_block.size, dtype=np.complex128)
    rows = max(1, 4_000_000 // M)
    for i in range(0, s_block.size, rows):
        chunk = s_block[i:i + rows]
        out[i:i + rows] = np.exp(-np.outer(chunk, logs)).sum(axis=1)
    return out


def _em_tail(s: np.ndarray, a: float, M: int, J: int) -> np.ndarray:
    """Integral and Bernoulli terms beyond the direct sum, minus the 1/(s-1) pole part."""
    Na = M + a
    lg = math.log(Na)
    X = np.exp(-s * lg)
    z = (1 - s) * lg
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(z == 0, 1.0 + 0j, np.expm1(z) / np.where(z == 0, 1, z))
    out = -lg * ratio + 0.5 * X
    coeffs = bernoulli_coefficients(2 * J)
    poch = s.copy()
    inv = 1.0 / Na
    scale = inv
    for j in range(1, J + 1):
        out = out + coeffs[j - 1] * poch * X * scale
        poch = poch * (s + 2 * j - 1) * (s + 2 * j)
        scale = scale * inv * inv
    return out


def _block_bounds(t: np.ndarray, max_block: int = 512):
    """Consecutive index ranges of at most max_block sorted points."""
    n = t.size
    i = 0
    while i < n:
        j = min(n, i + max_block)
        yield i, j
        i = j


def _hurwitz_regular(s: np.ndarray, a: float, budget: EvalBudget) -> np.ndarray:
    """zeta(s, a) - 1/(s - 1), finite at s = 1."""
    J = budget.bernoulli_order // 2
    order = np.lexsort((s.imag, s.real))
    s_sorted = s[order]
    out_sorted = np.empty_like(s_sorted)
    for i, j in _block_bounds(s_sorted.imag):
        blk = s_sorted[i:j]
        M = _choose_cutoff(blk, a, budget)
        sub = max(1, min(blk.size, 4_000_000 // M))
        for u in range(0, blk.size, sub):
            piece = blk[u:u + sub]
            out_sorted[i + u:i + u + piece.size] = _direct_sum(piece, a, M) + _em_tail(piece, a, M, J)
    out = np.empty_like(out_sorted)
    out[order] = out_sorted
    return out


def hurwitz_zeta(s, a: float = 1.0, budget: EvalBudget = DEFAULT_BUDGET):
    """zeta(s, a) = sum_{n >= 0} (n + a)^-s, continued to sigma >= -1, s != 1."""
    a = float(a)
    if not 0 < a <= 1:
        raise ValidationError(f"Hurwitz parameter a must be in (0, 1], got {a}")
    pts, scalar = _as_points(s)
    _check_region(pts, budget, HURWITZ_SIGMA_MIN, "hurwitz_zeta")
    near = np.abs(pts - 1) < POLE_GUARD
    if np.any(near):
        raise PoleError(f"s={pts[near][0]} is within {POLE_GUARD} of the pole at s=1")
    vals = _hurwitz_regular(pts, a, budget) + 1.0 / (pts - 1)
    return _finish(vals, scalar)


def riemann_zeta(s, budget: EvalBudget = DEFAULT_BUDGET):
    return hurwitz_zeta(s, 1.0, budget)


def dirichlet_L(s, chi: QuadraticCharacter, budget: EvalBudget = DEFAULT_BUDGET):
    """L(s, chi) = q^-s sum_a chi(a) zeta(s, a/q); the 1/(s-1) parts cancel since sum chi(a) = 0."""
    pts, scalar = _as_points(s)
    _check_region(pts, budget, VALIDATED_SIGMA_MIN, "dirichlet_L")
    q = chi.modulus
    acc = np.zeros_like(pts)
    for r in range(1, q):
        c = chi.values[r]
        if c:
            acc += c * _hurwitz_regular(pts, r / q, budget)
    return _finish(np.exp(-pts * math.log(q)) * acc, scalar)


def p_function(s, q: int, sign: int = 1):
    """P(s) = prod_{p | q} (1 - sign p^-s)^-1 (sign = +1 is the usual finite Euler product)."""
    if sign not in (1, -1):
        raise ValidationError(f"sign must be +1 or -1, got {sign}")
    pts, scalar = _as_points(s)
    if pts.size and np.min(pts.real) <= 0:
        raise RegionError(f"p_function needs sigma > 0, got sigma={np.min(pts.real):.6g}")
    out = np.ones_like(pts)
    for p in prime_factors(int(q)):
        lp = math.log(p)
        # poles where p^-s = sign: s = i (2 pi m + offset) / log p
        offset = 0.0 if sign == 1 else math.pi
        m = np.round((pts.imag * lp - offset) / (2 * math.pi))
        pole = 1j * (2 * math.pi * m + offset) / lp
        close = np.abs(pts - pole) < POLE_GUARD
        if np.any(close):
            i = int(np.flatnonzero(close)[0])
            raise PoleError(f"s={pts[i]} within {POLE_GUARD} of a pole of P: p={p}, m={int(m[i])}")
        out = out / (1 - sign * np.exp(-pts * lp))
    return _finish(out, scalar)


def _check_sigma_above(pts: np.ndarray, bound: float, what: str):
    if pts.size and np.min(pts.real) <= bound:
        raise RegionError(f"{what}: needs sigma > {bound:.6g}, got {np.min(pts.real):.6g}")


def F_closed_form(s, k, chi: QuadraticCharacter, budget: EvalBudget = DEFAULT_BUDGET, sign: int = 1):
    """Closed form of F(s) = sum f(n) n^-s with f = mu^(k) g_chi.

    k even: L(s,chi) P(s) / zeta(ks);  k odd: L(s,chi) P(s) / (L(ks,chi) P(ks)).
    """
    k = as_kfree(k)
    pts, scalar = _as_points(s)
    _check_sigma_above(pts, 1 / k.k, "F_closed_form")
    kb = budget.covering(k.k * float(np.max(np.abs(pts.imag), initial=0.0)))
    vals = dirichlet_L(pts, chi, budget) * p_function(pts, chi.modulus, sign)
    vals = vals * _inverse_factor(k.k * pts, k.k, chi, kb, sign)
    return _finish(vals, scalar)


def _inverse_factor(ks: np.ndarray, k: int, chi: QuadraticCharacter, budget: EvalBudget, sign: int):
    """1/zeta(ks) (k even) or 1/(L(ks,chi) P(ks)) (k odd), evaluated at the points ks."""
    if k % 2 == 0:
        return 1.0 / riemann_zeta(ks, budget)
    return 1.0 / (dirichlet_L(ks, chi, budget) * p_function(ks, chi.modulus, sign))


@dataclass(frozen=True)
class TailFunctionSpec:
    """H_y (k even) or H~_y (k odd): closed form of the h-series minus its partial sum to y."""

    k: int
    chi: QuadraticCharacter
    y: float
    variant: str = ""
    sign: int = 1

    def __post_init__(self):
        k = as_kfree(self.k).k
        expected = "even" if k % 2 == 0 else "odd"
        if self.variant == "":
            object.__setattr__(self, "variant", expected)
        elif self.variant != expected:
            raise ValidationError(f"variant {self.variant!r} does not match parity of k={k}")
        if not self.y >= 1:
            raise ValidationError(f"truncation point y must be >= 1, got {self.y}")

    @property
    def sigma_min(self) -> float:
        """Admissible region: sigma >= 1/k + 0.05, where Re(ks) >= 1 + 0.05k keeps the closed form absolutely convergent."""
        return 1 / self.k + TAIL_MARGIN


def tail_coefficients(spec: TailFunctionSpec, limit: float | None = None) -> CoefficientSequence:
    N = max(int(math.floor(limit if limit is not None else spec.y)), 1)
    return factor_coefficients(spec.k, spec.chi, N, sign=spec.sign)


def dirichlet_polynomial(coeffs: CoefficientSequence, s, upto: float | None = None):
    """sum_{n <= upto} c(n) n^-s over the stored support of a sequence."""
    pts, scalar = _as_points(s)
    seq = coeffs.to_sparse()
    idx, val = seq.indices, seq.values
    if upto is not None:
        cut = np.searchsorted(idx, math.floor(upto), side="right")
        idx, val = idx[:cut], val[:cut]
    keep = val != 0
    idx, val = idx[keep], val[keep].astype(np.float64)
    logs = np.log(idx.astype(np.float64))
    out = np.empty(pts.size, dtype=np.complex128)
    rows = max(1, 2_000_000 // max(idx.size, 1))
    for i in range(0, pts.size, rows):
        out[i:i + rows] = np.exp(-np.outer(pts[i:i + rows], logs)) @ val
    return _finish(out, scalar)


def tail_closed_form(spec: TailFunctionSpec, s, budget: EvalBudget = DEFAULT_BUDGET):
    """P(s)/zeta(ks) or P(s)/(L(ks,chi)P(ks))."""
    pts, scalar = _as_points(s)
    if pts.size and np.min(pts.real) < spec.sigma_min - 1e-12:
        raise RegionError(f"tail function needs sigma >= 1/k + {TAIL_MARGIN} = {spec.sigma_min:.4g}, "
                          f"got {np.min(pts.real):.6g}")
    t_max = float(np.max(np.abs(pts.imag), initial=0.0))
    if t_max > budget.max_t:
        raise RegionError(f"tail function: |t|={t_max:.6g} exceeds max_t={budget.max_t:g}")
    kb = budget.covering(spec.k * t_max)
    vals = p_function(pts, spec.chi.modulus, spec.sign) * _inverse_factor(spec.k * pts, spec.k, spec.chi, kb, spec.sign)
    return _finish(vals, scalar)


def tail_function(spec: TailFunctionSpec, s, budget: EvalBudget = DEFAULT_BUDGET,
                  coeffs: CoefficientSequence | None = None):
    """H_y(s): closed form minus the exact truncated sum over n <= y."""
    if coeffs is None:
        coeffs = tail_coefficients(spec)
    elif coeffs.limit < math.floor(spec.y):
        raise ValidationError(f"coefficients only reach {coeffs.limit} < y={spec.y}")
    pts, scalar = _as_points(s)
    vals = tail_closed_form(spec, pts, budget) - dirichlet_polynomial(coeffs, pts, upto=spec.y)
    return _finish(vals, scalar)


# quadrature

@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error_estimate: float
    step: float
    points: int
    coarse_value: complex = field(default=0j)


def max_step_for(x: float) -> float:
    """Largest step resolving x^{it}: 2 pi / (20 log x)."""
    return 2 * math.pi / (20 * math.log(x))


def vertical_line_integral(integrand: Callable[[np.ndarray], np.ndarray], sigma0: float, T: float,
                           step: float, x: float | None = None, symmetric: bool = False) -> QuadratureResult:
    """(1 / 2 pi i) * integral of integrand(s) ds over sigma0 - iT .. sigma0 + iT.

    Composite trapezoid in t with step <= ``step`` (and <= 2 pi / (20 log x) when x
    is given), reported at half that step; the error estimate is the difference
    between the two. ``symmetric=True`` assumes integrand(conj s) = conj(integrand(s))
    and integrates over [0, T] only, returning a real value.
    """
    if not T > 0 or not step > 0:
        raise ValidationError(f"T and step must be positive (T={T}, step={step})")
    if x is not None and x > 1 and step > max_step_for(x) * (1 + 1e-12):
        raise ValidationError(
            f"step {step:.6g} does not resolve x^(it) for x={x}: use a step <= {max_step_for(x):.6g}")
    lo = 0.0 if symmetric else -float(T)
    span = float(T) - lo
    n = max(2, math.ceil(span / step))
    t = np.linspace(lo, float(T), 2 * n + 1)
    g = np.asarray(integrand(sigma0 + 1j * t), dtype=np.complex128)
    if g.shape != t.shape:
        raise ValidationError("integrand must return one value per point")
    h_fine = span / (2 * n)

    def trap(vals: np.ndarray, h: float) -> complex:
        return h * (np.sum(vals) - 0.5 * (vals[0] + vals[-1]))

    fine = trap(g, h_fine)
    coarse = trap(g[::2], 2 * h_fine)
    if symmetric:
        fine, coarse = complex(fine.real), complex(coarse.real)
        scale = 1 / math.pi
    else:
        scale = 1 / (2 * math.pi)
    value, cvalue = fine * scale, coarse * scale
    return QuadratureResult(value=value, error_estimate=abs(value - cvalue), step=h_fine,
                            points=t.size, coarse_value=cvalue)
