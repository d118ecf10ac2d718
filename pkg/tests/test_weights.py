import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rwlab.weights import WeightError, WeightFunction


def test_constant_weight():
    assert WeightFunction.power(0.0).weight(7) == 1.0


def test_identity_power():
    assert WeightFunction.power(1.0).weight(3) == 3.0


def test_square_root_weight():
    assert WeightFunction.power(0.5).weight(2) == pytest.approx(1.41421356, abs=1e-8)
    assert WeightFunction.power(0.5).weight(2) == 2 ** 0.5


@pytest.mark.parametrize("w0", [0.25, 1.0, 3.0])
def test_w0_is_free(w0):
    wf = WeightFunction.power(0.3, w0=w0)
    assert wf.weight(0) == w0
    assert wf.exact(0) == Fraction(w0)
    assert wf.nondecreasing == (w0 <= 1.0)


def test_scale():
    wf = WeightFunction.power(0.5, scale=2.0)
    assert wf.weight(4) == 4.0


@given(st.floats(0, 3), st.integers(1, 10_000))
def test_power_ratio_is_constant(alpha, k):
    wf = WeightFunction.power(alpha, scale=1.7)
    assert wf.weight(k) / k ** alpha == pytest.approx(1.7, rel=1e-12)


@given(st.floats(0, 3))
def test_power_table_monotone_and_positive(alpha):
    v = WeightFunction.power(alpha, w0=0.5).values(5000)
    assert (v > 0).all()
    assert (np.diff(v[1:]) >= 0).all()


@given(st.floats(0, 2), st.integers(0, 3000))
def test_values_match_scalar_weight(alpha, k):
    wf = WeightFunction.power(alpha)
    table = wf.values(k + 1)
    fresh = WeightFunction.power(alpha)
    assert fresh.weight(k) == table[k]
    assert table[k] == (1.0 if k == 0 else math.pow(k, alpha))


def test_exact_is_image_of_float():
    wf = WeightFunction.power(0.3)
    for k in range(1, 50):
        assert wf.exact(k) == Fraction(wf.weight(k))


def test_table_mode():
    wf = WeightFunction.from_table([1, Fraction(3, 2), 2], w0=Fraction(1, 2))
    assert wf.exact(2) == Fraction(3, 2)
    assert wf.weight(2) == 1.5
    assert wf.weight(0) == 0.5
    with pytest.raises(WeightError, match="past the end"):
        wf.weight(4)
    tail = WeightFunction.from_table([1, 2], tail="constant")
    assert tail.weight(100) == 2.0
    assert tail.exact(100) == 2


@pytest.mark.parametrize("kwargs", [
    dict(alpha=-0.1),
    dict(scale=0.0),
    dict(w0=0.0),
    dict(mode="spline"),
    dict(mode="table", table=()),
    dict(mode="table", table=(1, 0.5)),
    dict(mode="table", table=(1, -2)),
])
def test_rejects_bad_parameters(kwargs):
    with pytest.raises(WeightError):
        WeightFunction(**kwargs)


def test_negative_local_time():
    with pytest.raises(WeightError):
        WeightFunction.power(1.0).weight(-1)
