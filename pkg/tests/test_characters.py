import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles as O
from kfreechar.characters import (ModifiedCharacter, QuadraticCharacter, character_from_discriminant,
                                  character_from_table, f_segments, f_values, fundamental_discriminant_failure,
                                  kronecker, load_character_table, modified_values, parse_character)
from kfreechar.errors import ValidationError
from kfreechar.sieves import build_sieve

DISCRIMINANTS = [-3, -4, 5, 8, -7, -8, 12, 13, -15, 21, -20, 24, -39, 40]


@pytest.mark.parametrize("d", DISCRIMINANTS)
def test_character_matches_euler_criterion(d):
    assert list(character_from_discriminant(d).values) == O.chi_table(d)


def test_small_tables():
    assert character_from_discriminant(-3).values == (0, 1, -1)
    assert character_from_discriminant(-4).values == (0, 1, 0, -1)
    assert character_from_discriminant(5).values == (0, 1, -1, -1, 1)
    assert character_from_discriminant(8).values == (0, 1, 0, -1, 0, -1, 0, 1)


@given(st.integers(-500, 500), st.integers(1, 2000))
def test_kronecker_matches_definition(a, n):
    assert kronecker(a, n) == O.kronecker_by_factoring(a, n)


@given(st.integers(3, 200), st.integers(3, 200).filter(lambda n: n % 2))
def test_jacobi_reciprocity(m, n):
    if m % 2 == 0 or O.gcd(m, n) > 1:
        return
    sign = -1 if (m % 4 == 3 and n % 4 == 3) else 1
    assert kronecker(m, n) == sign * kronecker(n, m)


@pytest.mark.parametrize("d", [0, 1, 2, 3, -1, 9, -12, 16, 20, -36, 28 * 4])
def test_non_fundamental_rejected(d):
    assert fundamental_discriminant_failure(d) is not None
    with pytest.raises(ValidationError):
        character_from_discriminant(d)


@pytest.mark.parametrize("d", DISCRIMINANTS)
def test_fundamental_accepted(d):
    assert fundamental_discriminant_failure(d) is None


@pytest.mark.parametrize("d", DISCRIMINANTS)
def test_character_properties(d):
    chi = character_from_discriminant(d)
    q = chi.modulus
    assert sum(chi.values) == 0
    for a in range(q):
        assert (chi(a) == 0) == (O.gcd(a, q) > 1)
        for b in range(q):
            assert chi(a * b) == chi(a) * chi(b)


def test_table_validation_messages():
    with pytest.raises(ValidationError, match="not in"):
        character_from_table(3, [0, 2, -1])
    with pytest.raises(ValidationError, match="zero set"):
        character_from_table(4, [0, 1, 1, -1])
    with pytest.raises(ValidationError, match="witness"):
        character_from_table(5, [0, 1, 1, -1, -1])
    with pytest.raises(ValidationError, match="principal"):
        character_from_table(3, [0, 1, 1])
    with pytest.raises(ValidationError, match="modulus"):
        character_from_table(2, [0, 1])


def test_table_without_discriminant_is_accepted():
    chi = character_from_table(3, [0, 1, -1])
    assert chi.discriminant is None and chi.label == "q3"
    assert chi(7) == 1 and chi(8) == -1


def test_periodic_partial_sums():
    chi = character_from_discriminant(-7)
    seq = chi.periodic(1000)
    prefix = np.cumsum(seq)
    m = np.arange(0, 1001)
    assert np.array_equal(chi.partial_sum(m), prefix)
    assert chi.partial_sum(0) == 0 and chi.partial_sum(-5) == 0
    assert np.abs(prefix).max() <= chi.modulus


def test_parse_character(tmp_path):
    assert parse_character("d=-4").modulus == 4
    path = tmp_path / "chi.json"
    path.write_text(json.dumps([0, 1, 0, -1]))
    assert parse_character(f"table={path}").values == (0, 1, 0, -1)
    assert load_character_table(path).modulus == 4
    for bad in ("-4", "d=x", "mod=5", "d=4"):
        with pytest.raises(ValidationError):
            parse_character(bad)
    path.write_text(json.dumps({"q": 4}))
    with pytest.raises(ValidationError):
        load_character_table(path)


def test_modified_character_values():
    chi = character_from_discriminant(-3)
    g = ModifiedCharacter(chi)
    assert (g(1), g(2), g(3), g(6), g(9)) == (1, -1, 1, -1, 1)
    gm = ModifiedCharacter(chi, -1)
    assert (gm(3), gm(6), gm(9)) == (-1, 1, 1)
    with pytest.raises(ValidationError):
        ModifiedCharacter(chi, 0)
    with pytest.raises(ValidationError):
        g(0)


@pytest.mark.parametrize("d", [-3, -4, 5, 8, 12, -15])
@pytest.mark.parametrize("sign", [1, -1])
def test_modified_routes_agree(d, sign):
    chi = character_from_discriminant(d)
    g = ModifiedCharacter(chi, sign)
    N = 20000
    via_spf = modified_values(g, build_sieve(N), N).as_array()
    via_strip = g.segment(1, N + 1)
    assert np.array_equal(via_spf[1:], via_strip)
    assert [g(n) for n in range(1, 2001)] == [O.g(n, list(chi.values), sign) for n in range(1, 2001)]


@given(st.integers(1, 10**5), st.integers(1, 10**5), st.sampled_from([-3, -4, 5, 8]), st.sampled_from([1, -1]))
def test_modified_completely_multiplicative(a, b, d, sign):
    g = ModifiedCharacter(character_from_discriminant(d), sign)
    assert g(a * b) == g(a) * g(b)


@pytest.mark.parametrize("k", [2, 3])
def test_f_segments_match_dense(k):
    chi = character_from_discriminant(-4)
    g = ModifiedCharacter(chi)
    N = 50000
    dense = f_values(k, g, build_sieve(N), N).as_array()[1:]
    streamed = np.concatenate([blk for _, blk in f_segments(k, g, N, segment=4096)])
    assert np.array_equal(dense, streamed)
    assert [int(v) for v in dense[:3000]] == [O.f(n, k, list(chi.values)) for n in range(1, 3001)]
