"""Runnable experiments: partial sums and exponent fits, the A/B split,
Perron residuals, moment integrals, tail decay and smooth-count ratios.

Empirical "<<" statements become bounded-ratio checks with explicit slack;
implied constants are unknowable, so each check documents its own factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .analytic import (DEFAULT_BUDGET, EvalBudget, F_closed_form, TailFunctionSpec,
                       dirichlet_L, max_step_for, riemann_zeta, tail_coefficients,
                       tail_function, vertical_line_integral)
from .characters import ModifiedCharacter, QuadraticCharacter, f_segments
from .coefficients import cumulative_abs, factor_coefficients
from .errors import ConfigError, RegionError, ValidationError
from .sequences import CoefficientSequence
from .sieves import as_kfree, build_sieve

CHECKPOINT_START = 10
CHECKPOINT_RATIO = 1.1


# partial sums

def geometric_checkpoints(x_max: int, start: int = CHECKPOINT_START,
                          ratio: float = CHECKPOINT_RATIO) -> np.ndarray:
    """Integer grid floor(start * ratio^j) <= x_max, deduplicated, with x_max appended."""
    x_max = int(x_max)
    n = int(math.floor(math.log(x_max / start) / math.log(ratio))) + 2 if x_max >= start else 1
    grid = np.floor(start * ratio ** np.arange(n)).astype(np.int64)
    grid = np.unique(grid[(grid >= 1) & (grid <= x_max)])
    if grid.size == 0 or grid[-1] != x_max:
        grid = np.append(grid, x_max)
    return grid


@dataclass
class CheckpointSeries:
    """Exact S(x) and max_{m <= x} |S(m)| at the checkpoints.

    The running max is taken over every integer m <= x, not only checkpoints.
    """

    checkpoints: np.ndarray
    partial_sum: np.ndarray
    running_max: np.ndarray
    label: str = ""

    @property
    def x_max(self) -> int:
        return int(self.checkpoints[-1])

    def rows(self):
        for x, s, m in zip(self.checkpoints.tolist(), self.partial_sum.tolist(), self.running_max.tolist()):
            yield x, s, m


def _segments_of(values, x_max: int):
    if isinstance(values, CoefficientSequence):
        if values.limit < x_max:
            raise ValidationError(f"sequence limit {values.limit} < x_max {x_max}")
        yield 1, values.as_array()[1:x_max + 1]
    else:
        yield from values


def partial_sum_series(values, x_max: int, checkpoints: np.ndarray | None = None,
                       label: str = "") -> CheckpointSeries:
    """Stream S(x) = sum_{n <= x} a(n) over ``values`` (a sequence or (lo, block) segments)."""
    x_max = int(x_max)
    if x_max < 100:
        raise ValidationError(f"x_max must be >= 100, got {x_max}")
    cps = geometric_checkpoints(x_max) if checkpoints is None else np.asarray(checkpoints, dtype=np.int64)
    sums = np.zeros(cps.size, dtype=np.int64)
    maxes = np.zeros(cps.size, dtype=np.int64)
    carry_sum, carry_max, covered = 0, 0, 0
    for lo, block in _segments_of(values, x_max):
        if lo != covered + 1:
            raise ValidationError(f"segments must be contiguous: expected start {covered + 1}, got {lo}")
        block = np.asarray(block)[: max(0, x_max - lo + 1)]
        if block.size == 0:
            break
        cs = np.cumsum(block, dtype=np.int64) + carry_sum
        rm = np.maximum(np.maximum.accumulate(np.abs(cs)), carry_max)
        hi = lo + block.size  # exclusive
        sel = np.flatnonzero((cps >= lo) & (cps < hi))
        sums[sel] = cs[cps[sel] - lo]
        maxes[sel] = rm[cps[sel] - lo]
        carry_sum, carry_max, covered = int(cs[-1]), int(rm[-1]), hi - 1
        if covered >= x_max:
            break
    if covered < x_max:
        raise ValidationError(f"values stop at {covered}, before x_max={x_max}")
    return CheckpointSeries(cps, sums, maxes, label=label)


def f_partial_sums(k, g: ModifiedCharacter, x_max: int, segment: int | None = None) -> CheckpointSeries:
    """Checkpoint series for f = mu^(k) g up to x_max, in bounded memory."""
    kw = {} if segment is None else {"segment": segment}
    return partial_sum_series(f_segments(k, g, x_max, **kw), x_max,
                              label=f"f_k{as_kfree(k).k}_{g.base.label}")


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple[int, int]
    points: int


def fit_exponent(series: CheckpointSeries, window_fraction: float = 0.5) -> ExponentFit:
    """Least squares of log running_max on log x over the top window_fraction of checkpoints."""
    if not 0 < window_fraction <= 1:
        raise ValidationError(f"window_fraction must be in (0, 1], got {window_fraction}")
    n = series.checkpoints.size
    start = n - max(1, int(math.ceil(window_fraction * n)))
    x = series.checkpoints[start:].astype(float)
    y = series.running_max[start:].astype(float)
    keep = y > 0
    x, y = x[keep], y[keep]
    if x.size < 10:
        raise ValidationError(f"exponent fit needs >= 10 usable checkpoints, got {x.size}")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(slope), float(intercept), r2, (int(x[0]), int(x[-1])), int(x.size))


@dataclass(frozen=True)
class GrowthCheck:
    """running_max(x) / x^(1/(k+1) + slack) over the final decade of checkpoints."""

    exponent: float
    checkpoints: np.ndarray
    ratios: np.ndarray
    non_increasing: bool
    worst_rise: float  # largest ratio[i+1]/ratio[i] observed


def growth_ratio_check(series: CheckpointSeries, k, slack: float = 0.05) -> GrowthCheck:
    k = as_kfree(k).k
    alpha = 1 / (k + 1) + slack
    sel = series.checkpoints >= series.x_max / 10
    xs = series.checkpoints[sel]
    ratios = series.running_max[sel] / xs.astype(float) ** alpha
    rises = ratios[1:] / ratios[:-1] if ratios.size > 1 else np.array([1.0])
    return GrowthCheck(alpha, xs, ratios, bool(np.all(np.diff(ratios) <= 0)), float(rises.max()))


# A/B decomposition

@dataclass(frozen=True)
class ProofSplitConfig:
    k: int
    chi: QuadraticCharacter
    x: float
    beta: float = 0.55
    epsilon_slack: float = 0.05
    y: float | None = None
    T: float | None = None

    def __post_init__(self):
        k = as_kfree(self.k).k
        if not self.epsilon_slack > 0:
            raise ConfigError(f"epsilon_slack must be positive, got {self.epsilon_slack}")
        if self.beta < 0.5 + self.epsilon_slack - 1e-12:
            raise ConfigError(f"beta={self.beta} must be >= 1/2 + epsilon_slack = {0.5 + self.epsilon_slack}")
        if not self.x > 1:
            raise ConfigError(f"x must exceed 1, got {self.x}")
        if self.y is None:
            e = 2 * k * self.beta / (2 * k * self.beta + 1)
            object.__setattr__(self, "y", self.x ** e)
        if self.T is None:
            object.__setattr__(self, "T", self.x ** 2)
        if not self.y < self.x:
            raise ConfigError(f"need y < x, got y={self.y}, x={self.x}")
        if self.y < 1:
            raise ConfigError(f"y must be >= 1, got {self.y}")


@dataclass(frozen=True)
class ABSplit:
    A: int
    B: int

    @property
    def total(self) -> int:
        return self.A + self.B


def ab_split_sums(cfg: ProofSplitConfig, coeffs: CoefficientSequence | None = None) -> ABSplit:
    """A = sum_{ab <= x, a <= y} h(a) chi(b), B = the same over a > y.

    Walks the sparse support of h (or htilde) and uses the O(1) periodic
    character sum for the inner sum over b <= x/a.
    """
    x = int(math.floor(cfg.x))
    if coeffs is None:
        coeffs = factor_coefficients(cfg.k, cfg.chi, x)
    if coeffs.limit < x:
        raise ValidationError(f"coefficients reach {coeffs.limit} < x={x}")
    sp = coeffs.to_sparse()
    keep = sp.indices <= x
    a, ha = sp.indices[keep], sp.values[keep]
    inner = cfg.chi.partial_sum(x // a)
    terms = ha * inner
    small = a <= cfg.y
    return ABSplit(int(terms[small].sum()), int(terms[~small].sum()))


def direct_partial_sum(k, g: ModifiedCharacter, x: float) -> int:
    x = int(math.floor(x))
    total = 0
    for _, block in f_segments(k, g, x):
        total += int(block.sum(dtype=np.int64))
    return total


# Perron

@dataclass(frozen=True)
class PerronCheckResult:
    x: float
    T: float
    sigma0: float
    direct_sum: int
    integral_value: float
    residual: float
    r_bound: float
    quadrature_error: float
    step: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.r_bound + self.quadrature_error

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} x={self.x} T={self.T:g} sigma0={self.sigma0:.6f} direct={self.direct_sum} "
                f"integral={self.integral_value:.6f} residual={self.residual:.3e} "
                f"bound={self.r_bound:.3e} quad_err={self.quadrature_error:.1e}")


def perron_error_bound(k, x: float, T: float, sigma0: float, f_near: np.ndarray,
                       budget: EvalBudget = DEFAULT_BUDGET) -> float:
    """Truncation bound with implied constant 1.

    sum_{x/2 < n < 2x, n != x} |f(n)| min(1, x / (T|x - n|))
      + (x^sigma0 + 4^sigma0)/T * sum |f(n)| n^-sigma0,
    where the last sum is zeta(sigma0)/zeta(k sigma0) because |f| = mu^(k).
    ``f_near`` holds f(n) for n = 0..floor(2x).
    """
    k = as_kfree(k).k
    n = np.arange(f_near.size)
    sel = (n > x / 2) & (n < 2 * x) & (n != x)
    dist = np.abs(x - n[sel])
    near = np.sum(np.abs(f_near[sel]) * np.minimum(1.0, x / (T * dist)))
    dirichlet_abs = (riemann_zeta(sigma0, budget) / riemann_zeta(k * sigma0, budget)).real
    return float(near + (x ** sigma0 + 4 ** sigma0) / T * dirichlet_abs)


def perron_check(k, chi: QuadraticCharacter, x: float, T: float, sigma0: float | None = None,
                 budget: EvalBudget = DEFAULT_BUDGET, step: float | None = None,
                 sign: int = 1) -> PerronCheckResult:
    """Compare sum_{n <= x} f(n) with (1/2 pi i) int F(s) x^s / s ds on Re s = sigma0."""
    k = as_kfree(k)
    x, T = float(x), float(T)
    if x <= 1 or T <= 0:
        raise ValidationError(f"need x > 1 and T > 0 (x={x}, T={T})")
    if sigma0 is None:
        sigma0 = 1 + 1 / math.log(x)
    if sigma0 <= 1:
        raise ValidationError(f"sigma0 must exceed 1 for absolute convergence, got {sigma0}")
    step = max_step_for(x) if step is None else float(step)
    g = ModifiedCharacter(chi, sign)
    top = int(math.floor(2 * x)) + 1
    f_near = np.concatenate([[0], next(iter(f_segments(k, g, top, segment=top)))[1]]).astype(np.int64)
    direct = int(f_near[: int(math.floor(x)) + 1].sum())
    run_budget = budget.covering(k.k * T)
    log_x = math.log(x)

    def integrand(s):
        return F_closed_form(s, k, chi, run_budget, sign) * np.exp(s * log_x) / s

    quad = vertical_line_integral(integrand, sigma0, T, step, x=x, symmetric=True)
    value = float(quad.value.real)
    return PerronCheckResult(x=x, T=T, sigma0=sigma0, direct_sum=direct, integral_value=value,
                             residual=abs(direct - value),
                             r_bound=perron_error_bound(k, x, T, sigma0, f_near, run_budget),
                             quadrature_error=quad.error_estimate, step=quad.step)


# moments

@dataclass(frozen=True)
class MomentResult:
    T: float
    sigma: float
    integral: float
    ratio: float
    quadrature_error: float


DEFAULT_MOMENT_STEP = 0.05


def _check_moment_args(sigma: float, T: float, budget: EvalBudget):
    if sigma < 0.5:
        raise ValidationError(f"moment integrals need sigma >= 1/2, got {sigma}")
    if T > budget.max_t:
        raise RegionError(f"T={T} exceeds max_t={budget.max_t:g}")
    if T <= 1:
        raise ValidationError(f"T must exceed 1, got {T}")


def second_moment_L(chi: QuadraticCharacter, sigma: float, T: float,
                    budget: EvalBudget = DEFAULT_BUDGET, step: float = DEFAULT_MOMENT_STEP) -> MomentResult:
    """int_{-T}^{T} |L(sigma + it, chi)|^2 dt and its ratio to T log T."""
    _check_moment_args(sigma, T, budget)
    quad = vertical_line_integral(lambda s: np.abs(dirichlet_L(s, chi, budget)) ** 2 + 0j,
                                  sigma, T, step, symmetric=True)
    # symmetric mode returns (1/pi) int_0^T = (1/2pi) int_{-T}^{T}
    integral = 2 * math.pi * quad.value.real
    return MomentResult(T, sigma, integral, integral / (T * math.log(T)), 2 * math.pi * quad.error_estimate)


def l_over_s_integral(chi: QuadraticCharacter, sigma: float, T: float,
                      budget: EvalBudget = DEFAULT_BUDGET, step: float = DEFAULT_MOMENT_STEP) -> MomentResult:
    """int_{-T}^{T} |L(sigma + it, chi)| / |sigma + it| dt and its ratio to (log T)^(3/2)."""
    _check_moment_args(sigma, T, budget)
    quad = vertical_line_integral(lambda s: np.abs(dirichlet_L(s, chi, budget)) / np.abs(s) + 0j,
                                  sigma, T, step, symmetric=True)
    integral = 2 * math.pi * quad.value.real
    return MomentResult(T, sigma, integral, integral / math.log(T) ** 1.5, 2 * math.pi * quad.error_estimate)


# tail decay

@dataclass
class TailDecayResult:
    k: int
    rows: list[tuple[complex, float, complex]]  # (s, y, H_y(s))
    slopes: dict[complex, float]
    predicted: dict[complex, float]  # 1/(2k) - sigma


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    slope, _ = np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)
    return float(slope)


def tail_decay_experiment(k, chi: QuadraticCharacter, s_list: Iterable[complex],
                          y_list: Sequence[float], budget: EvalBudget = DEFAULT_BUDGET,
                          sign: int = 1) -> TailDecayResult:
    """|H_y(s)| across y for each s, with the least-squares slope in log y."""
    k = as_kfree(k).k
    s_list = [complex(s) for s in s_list]
    y_list = sorted(float(y) for y in y_list)
    if not y_list:
        raise ValidationError("y_list is empty")
    coeffs = tail_coefficients(TailFunctionSpec(k, chi, y_list[-1], sign=sign))
    rows, slopes, predicted = [], {}, {}
    for s in s_list:
        vals = []
        for y in y_list:
            H = tail_function(TailFunctionSpec(k, chi, y, sign=sign), s, budget, coeffs=coeffs)
            rows.append((s, y, H))
            vals.append(abs(H))
        if len(y_list) >= 2:
            slopes[s] = loglog_slope(y_list, vals)
        predicted[s] = 1 / (2 * k) - s.real
    return TailDecayResult(k, rows, slopes, predicted)


def tail_majorant(coeffs: CoefficientSequence, y: float, sigma: float) -> float:
    """sum_{n > y} |c(n)| n^-sigma over the stored support (finite part of the triangle bound)."""
    sp = coeffs.to_sparse()
    sel = sp.indices > y
    return float(np.sum(np.abs(sp.values[sel]) * sp.indices[sel].astype(float) ** -sigma))


# smooth-number bound on sum |h|

@dataclass
class SumAbsRatios:
    k: int
    modulus: int
    checkpoints: np.ndarray
    sums: np.ndarray
    ratios: np.ndarray  # sum / (x^(1/k) (log 3x)^(pi(q) + extra_log))
    extra_log: int

    @property
    def max_over_first(self) -> float:
        return float(self.ratios.max() / self.ratios[0])


def sum_abs_ratios(k, chi: QuadraticCharacter, x_max: int, x_min: int = 1000,
                   coeffs: CoefficientSequence | None = None) -> SumAbsRatios:
    """sum_{n <= x} |h(n)| / (x^(1/k) (log 3x)^pi(q)) on geometric checkpoints.

    For odd k the coefficients are htilde and the normaliser carries one extra
    log factor, matching the odd-case bound U^(1/k) (log U)^(pi(q) + 1).
    """
    k = as_kfree(k).k
    if coeffs is None:
        coeffs = factor_coefficients(k, chi, x_max)
    cps = geometric_checkpoints(x_max)
    cps = cps[cps >= x_min]
    if cps.size == 0 or cps[0] != x_min:
        cps = np.unique(np.concatenate([[x_min], cps]))
    sums = cumulative_abs(coeffs, cps)
    pi_q = int(np.searchsorted(build_sieve(chi.modulus).primes, chi.modulus, side="right"))
    extra = 0 if k % 2 == 0 else 1
    norm = cps.astype(float) ** (1 / k) * np.log(3 * cps.astype(float)) ** (pi_q + extra)
    return SumAbsRatios(k, chi.modulus, cps, sums, sums / norm, extra)


__all__ = [name for name in dir() if not name.startswith("_")]
