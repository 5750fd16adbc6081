import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavflight import ChannelParams, instantaneous_rate, inverse_gain, pathloss_integral
from uavflight.channel import db_to_linear, pathloss_integral_array

from conftest import CH


def test_defaults_match_reference_values():
    assert (CH.H, CH.beta, CH.W, CH.alpha) == (100.0, 1e8, 2e4, 2.0)
    assert CH.beta_db == pytest.approx(80.0)
    assert db_to_linear(80) == pytest.approx(1e8, rel=1e-15)


def test_from_db_round_trip():
    ch = ChannelParams.from_db(100, 80, 2e4)
    assert ch.beta == pytest.approx(1e8, rel=1e-15)


@pytest.mark.parametrize("kw", [{"H": 0}, {"beta": -1}, {"W": 0}, {"alpha": 1.5}])
def test_invalid_parameters_rejected(kw):
    with pytest.raises(ValueError):
        ChannelParams(**kw)


def test_inverse_gain_overhead():
    assert inverse_gain(0.0, CH) == pytest.approx(1e-4, rel=1e-15)


def test_inverse_gain_at_altitude_offset():
    assert inverse_gain(CH.H, CH) == pytest.approx(2 * CH.H**2 / CH.beta, rel=1e-15)


@given(st.floats(0, 1e5))
def test_inverse_gain_even(d):
    assert inverse_gain(-d, CH) == inverse_gain(d, CH)


def test_inverse_gain_vectorised():
    s = np.array([-100.0, 0.0, 100.0])
    np.testing.assert_allclose(inverse_gain(s, CH), [2e-4, 1e-4, 2e-4], rtol=1e-15)


def test_rate_zero_power():
    assert instantaneous_rate(0.0, 1234.0, CH) == 0.0


def test_rate_unit_snr_gives_half_bandwidth():
    s = 321.0
    p = inverse_gain(s, CH)
    assert instantaneous_rate(p, s, CH) == pytest.approx(CH.W / 2, rel=1e-12)


def test_rate_reference_value():
    # 1e4 * log2(11), evaluated with mpmath
    assert instantaneous_rate(1e-3, 0.0, CH) == pytest.approx(34594.31618637297, rel=1e-12)


def test_rate_rejects_negative_power():
    with pytest.raises(ValueError):
        instantaneous_rate(-1.0, 0.0, CH)


def test_integral_empty_interval():
    assert pathloss_integral(7.0, 7.0, CH) == 0.0


def test_integral_unit_height():
    ch = ChannelParams(H=1.0)
    assert pathloss_integral(0.0, 1.0, ch) == pytest.approx(4 / 3, rel=1e-14)
    assert pathloss_integral(0.0, 1.0, ch, method="quad") == pytest.approx(4 / 3, rel=1e-12)


def test_integral_alpha3_against_riemann_sum():
    # midpoint rule with 1e6 panels; mpmath gives 112955723.6060255
    ch = ChannelParams(alpha=3.0)
    assert pathloss_integral(-50.0, 50.0, ch) == pytest.approx(112955723.6060116, rel=1e-9)


def test_integral_rejects_reversed():
    with pytest.raises(ValueError):
        pathloss_integral(1.0, 0.0, CH)


def test_closed_form_requires_alpha2():
    with pytest.raises(ValueError):
        pathloss_integral(0.0, 1.0, ChannelParams(alpha=3.0), method="closed")


@settings(max_examples=100, deadline=None)
@given(st.floats(-5000, 5000), st.floats(0, 3000))
def test_closed_form_matches_quadrature(x, w):
    y = x + w
    a = pathloss_integral(x, y, CH, method="closed")
    b = pathloss_integral(x, y, CH, method="quad")
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("alpha", [2.0, 2.7, 4.0])
def test_array_matches_scalar(alpha):
    ch = ChannelParams(alpha=alpha)
    rng = np.random.default_rng(3)
    x = rng.uniform(-2000, 2000, 30)
    y = x + rng.uniform(0, 1500, 30)
    got = pathloss_integral_array(x, y, ch)
    want = [pathloss_integral(a, b, ch) for a, b in zip(x, y)]
    np.testing.assert_allclose(got, want, rtol=1e-9)


def test_integral_additive():
    a = pathloss_integral(-300, 200, CH) + pathloss_integral(200, 900, CH)
    assert a == pytest.approx(pathloss_integral(-300, 900, CH), rel=1e-13)
    assert math.isfinite(a)
