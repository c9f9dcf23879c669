import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from kfreechar.characters import ModifiedCharacter, character_from_discriminant, f_values
from kfreechar.coefficients import factor_coefficients
from kfreechar.errors import ConfigError, RegionError, ValidationError
from kfreechar.experiments import (CheckpointSeries, ProofSplitConfig, ab_split_sums, direct_partial_sum,
                                   f_partial_sums, fit_exponent, geometric_checkpoints, growth_ratio_check,
                                   l_over_s_integral, loglog_slope, partial_sum_series, perron_check,
                                   second_moment_L, sum_abs_ratios, tail_decay_experiment, tail_majorant)
from kfreechar.analytic import TailFunctionSpec, tail_coefficients
from kfreechar.coefficients import ones
from kfreechar.sieves import build_sieve

chi3 = character_from_discriminant(-3)
chi4 = character_from_discriminant(-4)
g3 = ModifiedCharacter(chi3)


def test_checkpoint_grid():
    cps = geometric_checkpoints(1000)
    assert cps[0] == 10 and cps[-1] == 1000
    assert np.all(np.diff(cps) > 0)
    assert cps.tolist()[:6] == [10, 11, 12, 13, 14, 16]
    ratios = cps[1:] / cps[:-1]
    assert ratios.max() < 1.2


def test_constant_sequence():
    s = partial_sum_series(ones(5000), 5000)
    assert np.array_equal(s.partial_sum, s.checkpoints)
    assert np.array_equal(s.running_max, s.checkpoints)


def test_character_running_max_bounded():
    s = partial_sum_series(chi3.sequence(10**6), 10**6)
    assert s.running_max.max() <= 3


def test_running_max_tracks_every_integer():
    # spike between two checkpoints must show up in the running max
    arr = np.zeros(201, dtype=np.int64)
    arr[[101, 102]] = [50, -50]
    from kfreechar.sequences import CoefficientSequence
    s = partial_sum_series(CoefficientSequence.from_dense(arr), 200, checkpoints=np.array([100, 103, 200]))
    assert s.partial_sum.tolist() == [0, 0, 0]
    assert s.running_max.tolist() == [0, 50, 50]


def test_streaming_matches_dense_route():
    N = 300000
    dense = f_values(2, g3, build_sieve(N), N)
    a = partial_sum_series(dense, N)
    b = f_partial_sums(2, g3, N, segment=12345)
    assert np.array_equal(a.partial_sum, b.partial_sum)
    assert np.array_equal(a.running_max, b.running_max)
    cs = np.cumsum(dense.as_array())
    assert np.array_equal(a.partial_sum, cs[a.checkpoints])
    assert np.array_equal(a.running_max, np.maximum.accumulate(np.abs(cs))[a.checkpoints])


def test_small_partial_sums_against_oracle():
    t = list(chi3.values)
    s = f_partial_sums(2, g3, 2000)
    ref = np.cumsum([O.f(n, 2, t) for n in range(1, 2001)])
    assert s.partial_sum.tolist() == ref[s.checkpoints - 1].tolist()


def test_baseline_running_max_at_one_million():
    # regression baseline: fixed by a first run, cross-checked by the dense route above
    s = f_partial_sums(2, g3, 10**6)
    assert (int(s.partial_sum[-1]), int(s.running_max[-1])) == (-4, 36)
    again = f_partial_sums(2, g3, 10**6)
    assert np.array_equal(s.running_max, again.running_max)


def test_series_invariants():
    s = f_partial_sums(3, ModifiedCharacter(chi4, -1), 10**5)
    assert np.all(np.diff(s.running_max) >= 0)
    assert np.all(np.abs(s.partial_sum) <= s.running_max)


def test_partial_sum_validation():
    with pytest.raises(ValidationError):
        partial_sum_series(ones(50), 50)
    with pytest.raises(ValidationError):
        partial_sum_series(ones(500), 1000)
    with pytest.raises(ValidationError):
        partial_sum_series(iter([(2, np.ones(500))]), 200)


def synthetic(fn, n=200):
    cps = geometric_checkpoints(10**8)[:n]
    vals = fn(cps.astype(float))
    return CheckpointSeries(cps, np.zeros_like(cps), vals)


def test_fit_recovers_exact_power():
    fit = fit_exponent(synthetic(lambda x: x ** 0.5))
    assert abs(fit.slope - 0.5) < 1e-9 and fit.r_squared > 1 - 1e-12


def test_fit_constant_and_window():
    fit = fit_exponent(synthetic(lambda x: np.full_like(x, 7.0)), window_fraction=0.3)
    assert abs(fit.slope) < 1e-12
    assert fit.points >= 10 and fit.window[1] == int(synthetic(lambda x: x).checkpoints[-1])


def test_fit_needs_ten_points():
    with pytest.raises(ValidationError):
        fit_exponent(synthetic(lambda x: x, n=15), window_fraction=0.5)
    base = synthetic(lambda x: x)
    vals = np.zeros(base.checkpoints.size)
    vals[-5:] = 1.0  # zero maxima are dropped, leaving 5 usable points
    with pytest.raises(ValidationError):
        fit_exponent(CheckpointSeries(base.checkpoints, base.partial_sum, vals), window_fraction=0.5)
    with pytest.raises(ValidationError):
        fit_exponent(synthetic(lambda x: x), window_fraction=0)


def test_growth_check_on_synthetic_decreasing_ratio():
    s = synthetic(lambda x: x ** 0.2)
    g = growth_ratio_check(s, 2)
    assert g.non_increasing and g.exponent == pytest.approx(1 / 3 + 0.05)


def test_proof_split_defaults_and_errors():
    cfg = ProofSplitConfig(2, chi3, 10**4, beta=0.6, epsilon_slack=0.05)
    assert cfg.y == pytest.approx(1e4 ** (2.4 / 3.4))
    assert cfg.T == 1e8
    with pytest.raises(ConfigError):
        ProofSplitConfig(2, chi3, 100, y=100)
    with pytest.raises(ConfigError):
        ProofSplitConfig(2, chi3, 100, beta=0.52, epsilon_slack=0.05)
    with pytest.raises(ConfigError):
        ProofSplitConfig(2, chi3, 100, epsilon_slack=0)


def test_ab_split_examples():
    direct = direct_partial_sum(2, g3, 10**4)
    split = ab_split_sums(ProofSplitConfig(2, chi3, 10**4, y=100))
    assert split.total == direct
    assert sum(O.f(n, 2, list(chi3.values)) for n in range(1, 10**4 + 1)) == direct
    odd = ab_split_sums(ProofSplitConfig(3, chi3, 10**4, y=100))
    assert odd.total == direct_partial_sum(3, g3, 10**4)


def test_ab_split_boundary():
    x = 5000
    coeffs = factor_coefficients(2, chi3, x)
    split = ab_split_sums(ProofSplitConfig(2, chi3, x, y=x - 1), coeffs)
    # only a = x contributes to B, with inner sum chi(1) = 1
    assert split.B == coeffs[x]


@settings(max_examples=25, deadline=None)
@given(x=st.integers(2, 20000), frac=st.floats(0, 0.999), k=st.sampled_from([2, 3, 4]),
       d=st.sampled_from([-3, -4, 5, 8]))
def test_ab_split_exact_property(x, frac, k, d):
    chi = character_from_discriminant(d)
    y = max(1.0, frac * x)
    if not y < x:
        return
    split = ab_split_sums(ProofSplitConfig(k, chi, x, y=y))
    assert split.total == direct_partial_sum(k, ModifiedCharacter(chi), x)


def test_perron_small_x():
    res = perron_check(2, chi3, 10.5, 1e4)
    assert res.direct_sum == sum(O.f(n, 2, list(chi3.values)) for n in range(1, 11))
    assert res.residual <= 0.05
    assert res.passed and res.r_bound > 0
    assert res.line().startswith("PASS")


def test_perron_bound_monotone_in_T():
    a = perron_check(2, chi3, 10.5, 500)
    b = perron_check(2, chi3, 10.5, 1000)
    assert b.r_bound < a.r_bound
    assert b.residual <= a.r_bound + a.quadrature_error
    assert a.passed and b.passed


@pytest.mark.parametrize("k,chi,sign", [(3, chi3, 1), (2, chi4, -1), (4, chi3, 1)])
def test_perron_other_configurations(k, chi, sign):
    res = perron_check(k, chi, 30.5, 600, sign=sign)
    assert res.passed, res.line()


def test_perron_validation():
    with pytest.raises(ValidationError):
        perron_check(2, chi3, 10.5, 100, sigma0=0.9)
    with pytest.raises(ValidationError):
        perron_check(2, chi3, 0.5, 100)


def test_moment_large_sigma_limit():
    r = second_moment_L(chi3, 2.0, 100)
    # |L(2+it)| stays within [zeta(4)/zeta(2), zeta(2)] in size, so the mean square is near 1
    assert 0.5 * 200 < r.integral < 2 * 200
    l = l_over_s_integral(chi3, 2.0, 100)
    assert l.integral / math.log(100) < 10


def test_l_over_s_half_step_oracle():
    coarse = l_over_s_integral(chi3, 0.5, 50)
    fine = l_over_s_integral(chi3, 0.5, 50, step=0.005)
    assert abs(coarse.integral - fine.integral) < 0.01 * fine.integral


def test_moment_baseline_and_region():
    r = second_moment_L(chi3, 0.5, 50)
    assert r.ratio == pytest.approx(1.589629024361296, rel=1e-9)
    with pytest.raises(RegionError):
        second_moment_L(chi3, 0.5, 5000)
    with pytest.raises(ValidationError):
        second_moment_L(chi3, 0.4, 50)


def test_tail_decay_rows_and_majorant():
    res = tail_decay_experiment(2, chi3, [2 + 10j], [100, 1000])
    assert len(res.rows) == 2 and res.predicted[2 + 10j] == pytest.approx(0.25 - 2)
    coeffs = tail_coefficients(TailFunctionSpec(2, chi3, 10**6))
    for _, y, H in res.rows:
        assert abs(H) <= tail_majorant(coeffs, y, 2.0) + 1e-5
    with pytest.raises(RegionError):
        tail_decay_experiment(2, chi3, [0.5 + 10j], [100, 1000])


def test_loglog_slope():
    assert loglog_slope([1, 10, 100], [3, 30, 300]) == pytest.approx(1.0)


def test_sum_abs_ratios_small():
    r = sum_abs_ratios(2, chi3, 10**5)
    assert r.checkpoints[0] == 1000 and r.extra_log == 0
    assert np.all(r.ratios > 0)
    odd = sum_abs_ratios(3, chi3, 10**5)
    assert odd.extra_log == 1
