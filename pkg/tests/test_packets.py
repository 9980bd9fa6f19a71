import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from qtime import packets
from qtime.packets import FreeGaussian1D, WavePacketSum

from oracles import gaussian_norm


def two_term():
    return WavePacketSum(((1, FreeGaussian1D(1, 1, 1, 2.0, 0.3)),
                          (0.5j, FreeGaussian1D(-2, -1, 0.7, 2.0, -1))))


def test_peak_amplitude():
    g = FreeGaussian1D(-10, 2, 3)
    assert abs(packets.amplitude(g, -10, 0)) == pytest.approx(gaussian_norm(3), rel=1e-14)


def test_closed_form_norm_matches_quadrature():
    s = two_term()
    direct = integrate.quad(lambda x: packets.density(s, x, 1.1), -50, 50, limit=500)[0]
    assert s.norm_squared() == pytest.approx(direct, rel=1e-10)


def test_momentum_unitarity():
    s = two_term()
    p = integrate.quad(lambda k: abs(packets.momentum_amplitude(s, k, 0.4)) ** 2, -30, 30,
                       limit=500)[0]
    assert p == pytest.approx(s.norm_squared(), rel=1e-10)


def test_momentum_amplitude_is_fourier_transform():
    g = FreeGaussian1D(0.7, 1.3, 0.9, 1.5)
    t, k = 0.8, 1.1
    re = integrate.quad(lambda x: (packets.amplitude(g, x, t) * np.exp(-1j * k * x)).real, -30, 30)[0]
    im = integrate.quad(lambda x: (packets.amplitude(g, x, t) * np.exp(-1j * k * x)).imag, -30, 30)[0]
    assert abs((re + 1j * im) / math.sqrt(2 * math.pi) - packets.momentum_amplitude(g, k, t)) < 1e-10


def test_width_spreads():
    g = FreeGaussian1D(0, 0, 2.0, 3.0)
    assert float(g.width(12.0)) == pytest.approx(2.0 * math.sqrt(1 + (12 / (2 * 3 * 4)) ** 2))


def test_current_of_single_packet():
    # j = rho * (v + (x - x0 - vt) t / (4 m^2 sigma^4 + t^2) ) for a free Gaussian
    g = FreeGaussian1D(0.5, 1.2, 0.8, 1.0)
    x, t = 2.0, 1.5
    xi = x - 0.5 - 1.2 * t
    expected = packets.density(g, x, t) * (1.2 + xi * t / (4 * 0.8 ** 4 + t * t))
    assert packets.current(g, x, t) == pytest.approx(expected, rel=1e-12)


def test_shift_and_mirror():
    g = FreeGaussian1D(1.0, 2.0, 1.0)
    assert packets.amplitude(g.shifted(dx=3.0), 4.0, 0.5) == pytest.approx(packets.amplitude(g, 1.0, 0.5))
    m = g.mirrored()
    assert packets.density(m, -1.7, 0.4) == pytest.approx(packets.density(g, 1.7, 0.4))
    assert packets.current(m, -1.7, 0.4) == pytest.approx(-packets.current(g, 1.7, 0.4))


def test_mixed_masses_rejected():
    with pytest.raises(ValueError):
        WavePacketSum(((1, FreeGaussian1D(mass=1)), (1, FreeGaussian1D(mass=2))))
    with pytest.raises(ValueError):
        FreeGaussian1D(sigma0=0.0)


def test_negative_momentum_probability_single():
    g = FreeGaussian1D(0, 1.0, 1.0)
    assert packets.momentum_probability_negative(g) == pytest.approx(0.5 * math.erfc(math.sqrt(2)))


def test_negative_momentum_probability_backflow_state():
    from qtime.arrival import backflow_state
    p = packets.momentum_probability_negative(backflow_state())
    assert 1e-34 <= p <= 1e-32


packet = st.builds(
    FreeGaussian1D,
    x0=st.floats(-5, 5), v=st.floats(-3, 3), sigma0=st.floats(0.4, 3.0),
    mass=st.just(1.0), t0=st.floats(-1, 1))
coeff = st.complex_numbers(min_magnitude=0.1, max_magnitude=2.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coeff, packet), min_size=1, max_size=4), st.floats(-5, 5), st.floats(0.1, 4))
def test_continuity_residual_small(terms, x, t):
    s = WavePacketSum(tuple(terms))
    scale = max(float(np.max(np.abs(packets.current(s, np.linspace(-15, 15, 301), t)))), 1e-3)
    assert packets.continuity_residual(s, x, t) < 1e-6 * scale


def test_double_slit_separable_at_zero_angle():
    st_ = packets.converging_double_slit(2.0, 0.5, 4.0, 0.0, 0.0, 0.0)
    # both arms identical: the state is twice one product packet
    jx, jz = packets.current2d(st_, 0.1, 0.3, 0.7)
    g = FreeGaussian1D(0.0, 4.0, 2.0)
    h = FreeGaussian1D(0.0, 0.0, 0.5)
    rho_x = packets.density(h, 0.1, 0.7)
    assert jz == pytest.approx(4 * rho_x * packets.current(g, 0.3, 0.7), rel=1e-12)
