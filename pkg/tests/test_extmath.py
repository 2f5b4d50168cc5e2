import math
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ldlab.extmath import (
    NEG_INF,
    POS_INF,
    add_lower,
    add_upper,
    ensure_ext,
    from_json_value,
    log_sum_exp,
    scale,
    to_json_value,
)

SAMPLE = [NEG_INF, -1.0, 0.0, 1.0, POS_INF]


def test_add_lower_examples():
    assert add_lower(NEG_INF, POS_INF) == NEG_INF
    assert add_lower(0.0, 0.0) == 0.0
    assert add_lower(2.5, POS_INF) == POS_INF


def test_add_upper_examples():
    assert add_upper(NEG_INF, POS_INF) == POS_INF
    assert add_upper(-1.0, NEG_INF) == NEG_INF
    assert add_upper(3.0, 4.0) == 7.0


@pytest.mark.parametrize("op", [add_lower, add_upper])
def test_additions_commutative_and_associative(op):
    for a, b in product(SAMPLE, repeat=2):
        assert op(a, b) == op(b, a)
    for a, b, c in product(SAMPLE, repeat=3):
        assert op(op(a, b), c) == op(a, op(b, c))


def test_additions_agree_off_the_ambiguous_pair():
    for a, b in product(SAMPLE, repeat=2):
        if {a, b} != {NEG_INF, POS_INF}:
            assert add_lower(a, b) == add_upper(a, b)


def test_nan_rejected():
    with pytest.raises(ValueError):
        ensure_ext(float("nan"))
    with pytest.raises(ValueError):
        add_lower(float("nan"), 1.0)
    with pytest.raises(ValueError):
        add_upper(1.0, float("nan"))


def test_scale_conventions():
    assert scale(0.0, POS_INF) == 0.0
    assert scale(0.0, NEG_INF) == 0.0
    assert scale(2.0, POS_INF) == POS_INF
    assert scale(-3.0, POS_INF) == NEG_INF
    assert scale(-3.0, NEG_INF) == POS_INF
    assert scale(2.0, 3.0) == 6.0


def test_log_sum_exp_examples():
    assert log_sum_exp([]) == NEG_INF
    assert log_sum_exp([math.log(0.5), math.log(0.5)]) == pytest.approx(0.0, abs=1e-15)
    assert log_sum_exp([0.0, 0.0]) == pytest.approx(math.log(2.0), rel=1e-15)


def test_log_sum_exp_infinities():
    assert log_sum_exp([NEG_INF, NEG_INF]) == NEG_INF
    assert log_sum_exp([NEG_INF, 1.0]) == pytest.approx(1.0, rel=1e-15)
    assert log_sum_exp([POS_INF, 0.0]) == POS_INF


@given(st.lists(st.floats(min_value=-50, max_value=50), min_size=1, max_size=8))
def test_log_sum_exp_matches_direct_sum(terms):
    direct = math.log(math.fsum(math.exp(t) for t in terms))
    assert log_sum_exp(terms) == pytest.approx(direct, rel=1e-12)


@given(
    st.lists(st.floats(min_value=-50, max_value=50), min_size=2, max_size=8),
    st.randoms(use_true_random=False),
)
def test_log_sum_exp_permutation_invariant(terms, rng):
    shuffled = list(terms)
    rng.shuffle(shuffled)
    assert log_sum_exp(terms) == log_sum_exp(shuffled)


@given(
    st.lists(st.floats(min_value=-50, max_value=50), min_size=1, max_size=6),
    st.integers(min_value=0, max_value=5),
    st.floats(min_value=0.01, max_value=5.0),
)
def test_log_sum_exp_monotone_per_term(terms, idx, bump):
    idx = idx % len(terms)
    bigger = list(terms)
    bigger[idx] += bump
    assert log_sum_exp(bigger) >= log_sum_exp(terms)


def test_json_values_roundtrip():
    for x in [1.5, 0.0, -2.25, POS_INF, NEG_INF]:
        assert from_json_value(to_json_value(x)) == x
    assert to_json_value(POS_INF) == "+inf"
    assert to_json_value(NEG_INF) == "-inf"
    assert to_json_value(3.0) == 3.0
