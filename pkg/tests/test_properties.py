import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from wwrfva.curves import Curve
from wwrfva.exposure import normal_moments, truncated_normal_moments
from wwrfva.instruments import (Swap, positive_indicator, swap_value_y,
                                swap_weights, ystar)
from wwrfva.mc import build_correlation
from wwrfva.models import Hw1fParams, bfac, hw_terms, int_bfac

finite = dict(allow_nan=False, allow_infinity=False)


# ---------------------------------------------------------------------------
# stable scalar helpers

@given(a=st.floats(1e-12, 5.0), tau=st.floats(1e-6, 50.0))
def test_bfac_bounds(a, tau):
    b = bfac(a, tau)
    assert 0.0 < b <= tau * (1.0 + 1e-12)
    ib = int_bfac(a, tau)
    assert 0.0 < ib <= 0.5 * tau * tau * (1.0 + 1e-12)
    # bfac decreases in a at fixed tau
    assert bfac(a * 2.0, tau) <= b * (1.0 + 1e-12)


@given(tau=st.floats(1e-4, 40.0))
def test_bfac_continuous_at_zero_reversion(tau):
    assert bfac(1e-13, tau) == pytest.approx(tau, rel=1e-8)
    assert int_bfac(1e-13, tau) == pytest.approx(0.5 * tau * tau, rel=1e-6)


# ---------------------------------------------------------------------------
# moment recursions

@given(var=st.floats(1e-10, 25.0), z=st.floats(-6.0, 6.0),
       l_max=st.integers(2, 12))
def test_truncated_moment_recursion_properties(var, z, l_max):
    ystar_value = z * math.sqrt(var)
    tm = truncated_normal_moments(var, ystar_value, l_max)
    assert tm.m_check[0] == 1.0
    assert 0.0 <= tm.big_f <= 1.0
    assert np.allclose(tm.partial, tm.m_check * tm.big_f, rtol=1e-13,
                       atol=1e-300)
    # even conditional moments are nonnegative
    assert np.all(tm.m_check[::2] >= 0.0)
    # the truncated mass grows with the boundary
    tm_hi = truncated_normal_moments(var, ystar_value + math.sqrt(var), l_max)
    assert tm_hi.big_f >= tm.big_f


@given(var=st.floats(1e-8, 10.0), l_max=st.integers(2, 16))
def test_plain_moments_recursion(var, l_max):
    m = normal_moments(var, l_max)
    assert m[0] == 1.0
    # recursion m_l = (l-1) var m_{l-2}
    for l in range(2, l_max + 1):
        assert m[l] == pytest.approx((l - 1) * var * m[l - 2], rel=1e-12)


# ---------------------------------------------------------------------------
# correlation assembly

@given(rho_ab=st.floats(-0.99, 0.99), rho_ac=st.floats(-0.99, 0.99),
       rho_bc=st.floats(-0.99, 0.99))
def test_correlation_validation_is_sound(rho_ab, rho_ac, rho_bc):
    entries = {"a:b": rho_ab, "a:c": rho_ac, "b:c": rho_bc}
    try:
        c = build_correlation(["a", "b", "c"], entries)
    except ValueError:
        # rejected: must genuinely fail positive semidefiniteness
        m = np.array([[1.0, rho_ab, rho_ac],
                      [rho_ab, 1.0, rho_bc],
                      [rho_ac, rho_bc, 1.0]])
        assert np.linalg.eigvalsh(m).min() < 1e-10
        return
    assert np.allclose(c.matrix, c.matrix.T)
    assert np.linalg.eigvalsh(c.matrix).min() >= -1e-10
    assert np.allclose(np.diag(c.matrix), 1.0)


# ---------------------------------------------------------------------------
# curves

@given(t=st.floats(0.0, 60.0))
def test_curve_interpolation_within_pillar_range(t):
    c = Curve(label="x", times=(1.0, 5.0, 10.0, 30.0),
              zero_rates=(0.01, 0.02, 0.015, 0.03))
    z = c.zero_rate(t)
    assert 0.01 - 1e-15 <= z <= 0.03 + 1e-15
    if t >= 30.0:
        assert z == pytest.approx(0.03)
    if t <= 1.0:
        assert z == pytest.approx(0.01)
    assert 0.0 < c.discount(t) <= 1.0 + 1e-15


@given(t=st.floats(0.01, 40.0), h=st.floats(1e-6, 0.01))
def test_curve_bump_moves_zero_rate_uniformly(t, h):
    c = Curve(label="x", times=(1.0, 10.0, 30.0),
              zero_rates=(0.01, 0.02, 0.025))
    b = c.bumped(h)
    assert b.zero_rate(t) == pytest.approx(c.zero_rate(t) + h, rel=1e-9)


# ---------------------------------------------------------------------------
# swap root and indicator

SWAPS = st.builds(
    lambda K, expiry, years, freq, d: Swap.regular(
        currency="EUR", notional=100.0, fixed_rate=K, expiry=expiry,
        maturity=expiry + years, frequency=freq, direction=d),
    K=st.floats(0.0, 0.06), expiry=st.floats(0.25, 5.0),
    years=st.integers(1, 20), freq=st.sampled_from([1, 2]),
    d=st.sampled_from(["payer", "receiver"]))


@settings(deadline=None, max_examples=40)
@given(s=SWAPS, u_frac=st.floats(0.01, 0.99), data=st.data())
def test_root_and_indicator_consistency(s, u_frac, data):
    curve = Curve(label="EUR", times=(1.0, 30.0), zero_rates=(0.01, 0.015))
    rp = Hw1fParams(x0=0.0, a=0.03, sigma=0.004, curve=curve)
    u = u_frac * s.maturity
    sw = swap_weights(s, rp, 0.0, u)
    sd = math.sqrt(hw_terms(rp, 0.0, u).var_y)
    star = ystar(s, sw, sd)
    ys = np.array(data.draw(st.lists(st.floats(-8.0, 8.0, **finite),
                                     min_size=5, max_size=30))) * sd
    vals = swap_value_y(s, sw, ys)
    ind = positive_indicator(s, ys, star).astype(bool)
    scale = s.notional * (abs(sw.const) + float(np.abs(sw.wbar).sum()))
    clear = np.abs(vals) > 1e-9 * scale  # ignore knife-edge states
    assert np.array_equal(ind[clear], vals[clear] > 0.0)
    if math.isfinite(star):
        assert abs(swap_value_y(s, sw, star)) <= 1e-6 * scale
