import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfpp import airy
from pfpp.errors import RangeError

mpmath.mp.dps = 30


def mp_ai(x):
    return float(mpmath.airyai(x)), float(mpmath.airyai(x, derivative=1))


def mp_tail(x):
    # ∫_x^∞ Ai = 1/3 - ∫_0^x Ai (closed-form total ∫_0^∞ Ai = 1/3)
    return float(mpmath.mpf(1) / 3 - mpmath.quad(mpmath.airyai, [0, x]))


def test_values_at_zero():
    a, ap = airy.ai(0.0)
    assert a == pytest.approx(0.3550280538878172, abs=1e-16)
    assert ap == pytest.approx(-0.2588194037928068, abs=1e-16)
    assert airy.ai_tail(0.0) == pytest.approx(1.0 / 3.0, abs=1e-15)


def test_tail_towards_minus_infinity():
    t = float(airy.ai_tail(-20.0))
    assert 0.9 < t < 1.1
    assert t == pytest.approx(mp_tail(-20.0), abs=1e-13)


@pytest.mark.parametrize("x", np.linspace(-10, 10, 41))
def test_against_mpmath_inner_range(x):
    a, ap = airy.ai(x)
    ea, eap = mp_ai(x)
    assert abs(a - ea) <= 1e-12
    assert abs(ap - eap) <= 1e-12
    assert abs(airy.ai_tail(x) - mp_tail(x)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-30, 30))
def test_against_mpmath_full_range(x):
    a, ap = airy.ai(x)
    ea, eap = mp_ai(x)
    # oscillation amplitude grows like |x|^(1/4) for Ai'
    assert abs(a - ea) <= 1e-13
    assert abs(ap - eap) <= 5e-14


# T = ∫_x^∞ Ai crosses 1 at X_ONE and T' = -Ai changes sign at the first zero of Ai
X_ONE = -1.3841836806122248
AI_ZERO_1 = -2.338107410459767


def test_tail_exceeds_one_left_of_crossing():
    assert airy.ai_tail(X_ONE) == pytest.approx(1.0, abs=1e-12)
    assert airy.ai_tail(-2.0) == pytest.approx(mp_tail(-2.0), abs=1e-12)
    assert airy.ai_tail(-2.0) > 1.2
    assert airy.ai_tail(AI_ZERO_1) > airy.ai_tail(AI_ZERO_1 - 0.5)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(X_ONE + 1e-6, 29.9))
def test_tail_in_unit_interval(x):
    assert 0.0 < airy.ai_tail(x) < 1.0


@settings(max_examples=30, deadline=None)
@given(x=st.floats(AI_ZERO_1, 29.0), h=st.floats(1e-3, 1.0))
def test_tail_decreasing_right_of_first_zero(x, h):
    assert airy.ai_tail(x + h) <= airy.ai_tail(x)


def test_vectorised_shapes():
    x = np.linspace(-3, 3, 12).reshape(3, 4)
    a, ap = airy.ai(x)
    assert a.shape == ap.shape == airy.ai_tail(x).shape == (3, 4)


def test_range_error():
    with pytest.raises(RangeError):
        airy.ai(30.5)
    with pytest.raises(RangeError):
        airy.ai_tail([0.0, -31.0])
    with pytest.raises(RangeError):
        airy.ai(np.nan)


def test_airy_eval_record():
    v = airy.airy_eval(1.5)
    assert v.x == 1.5
    assert v.ai == pytest.approx(mp_ai(1.5)[0], abs=1e-15)
    assert v.ai_tail == pytest.approx(mp_tail(1.5), abs=1e-15)
