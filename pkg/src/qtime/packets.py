"""Freely evolving Gaussian packets with analytic amplitudes and currents (hbar = 1).

A packet is G_sigma(x - x0, t - t0): the Gaussian of initial width sigma
centred at x0, moving with velocity v, released at time t0.  Sums of
packets are kept unnormalised; `norm_squared` computes the norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

_QUARTER = (2.0 * math.pi) ** -0.25


@dataclass(frozen=True)
class FreeGaussian1D:
    x0: float = 0.0
    v: float = 0.0
    sigma0: float = 1.0
    mass: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    @property
    def k0(self):
        return self.mass * self.v

    def width(self, t):
        """Position standard deviation at time t."""
        tau = (np.asarray(t, dtype=float) - self.t0) / (2.0 * self.mass * self.sigma0 ** 2)
        return self.sigma0 * np.sqrt(1.0 + tau ** 2)

    def _a(self, tau):
        return self.sigma0 * (1.0 + 1j * tau / (2.0 * self.mass * self.sigma0 ** 2))

    def amplitude_and_derivative(self, x, t):
        tau = np.asarray(t, dtype=float) - self.t0
        y = np.asarray(x, dtype=float) - self.x0
        a = self._a(tau)
        u = y - self.v * tau
        phase = 0.5j * self.mass * self.v * (2.0 * y - self.v * tau)
        psi = _QUARTER / np.sqrt(a) * np.exp(phase - u * u / (4.0 * self.sigma0 * a))
        dpsi = psi * (1j * self.k0 - u / (2.0 * self.sigma0 * a))
        return psi, dpsi

    def amplitude(self, x, t):
        return self.amplitude_and_derivative(x, t)[0]

    def momentum_amplitude(self, k, t=0.0):
        """(2 pi)^{-1/2} int psi(x, t) e^{-ikx} dx."""
        k = np.asarray(k, dtype=float)
        q = k - self.k0
        base = _QUARTER * math.sqrt(2.0 * self.sigma0) * np.exp(-(self.sigma0 * q) ** 2)
        tau = np.asarray(t, dtype=float) - self.t0
        return base * np.exp(-1j * k * self.x0 - 0.5j * k * k * tau / self.mass)

    def shifted(self, dx=0.0, dt=0.0):
        return FreeGaussian1D(self.x0 + dx, self.v, self.sigma0, self.mass, self.t0 + dt)

    def mirrored(self, about=0.0):
        return FreeGaussian1D(2.0 * about - self.x0, -self.v, self.sigma0, self.mass, self.t0)


@dataclass(frozen=True)
class WavePacketSum:
    terms: tuple    # ((coefficient, FreeGaussian1D), ...)

    def __post_init__(self):
        terms = tuple((complex(c), p) for c, p in self.terms)
        if not terms:
            raise ValueError("need at least one term")
        if len({p.mass for _, p in terms}) != 1:
            raise ValueError("all packets must share the mass")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def single(cls, packet, coefficient=1.0):
        return cls(((coefficient, packet),))

    @property
    def mass(self):
        return self.terms[0][1].mass

    def __add__(self, other):
        return WavePacketSum(self.terms + other.terms)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, c):
        return WavePacketSum(tuple((c * a, p) for a, p in self.terms))

    def shifted(self, dx=0.0, dt=0.0):
        return WavePacketSum(tuple((c, p.shifted(dx, dt)) for c, p in self.terms))

    def mirrored(self, about=0.0):
        return WavePacketSum(tuple((c, p.mirrored(about)) for c, p in self.terms))

    def amplitude_and_derivative(self, x, t):
        psi = 0j
        dpsi = 0j
        for c, p in self.terms:
            a, d = p.amplitude_and_derivative(x, t)
            psi = psi + c * a
            dpsi = dpsi + c * d
        return psi, dpsi

    def norm_squared(self):
        """Exact: overlaps of Gaussians are Gaussian integrals in momentum space."""
        total = 0.0
        for ci, pi in self.terms:
            for cj, pj in self.terms:
                total += (np.conj(ci) * cj * _overlap(pi, pj)).real
        return float(total)


def _overlap(p, q):
    """<p|q> at a common time, computed at t = 0 in momentum space."""
    # |p~(k)| |q~(k)| are Gaussians; the phases are quadratic in k
    sp2, sq2 = p.sigma0 ** 2, q.sigma0 ** 2
    a = sp2 + sq2 - 0.5j * (q.t0 - p.t0) / p.mass       # coefficient of -k^2 in the exponent
    b = 2 * sp2 * p.k0 + 2 * sq2 * q.k0 + 1j * (p.x0 - q.x0)
    c = -(sp2 * p.k0 ** 2 + sq2 * q.k0 ** 2)
    pref = _QUARTER ** 2 * 2.0 * math.sqrt(p.sigma0 * q.sigma0)
    # int exp(-a k^2 + b k + c) dk
    return complex(pref * np.sqrt(np.pi / a) * np.exp(b * b / (4 * a) + c))


def _as_sum(state):
    return state if isinstance(state, WavePacketSum) else WavePacketSum.single(state)


def amplitude(state, x, t):
    return _as_sum(state).amplitude_and_derivative(x, t)[0]


def density(state, x, t):
    return np.abs(amplitude(state, x, t)) ** 2


def momentum_amplitude(state, k, t=0.0):
    state = _as_sum(state)
    return sum(c * p.momentum_amplitude(k, t) for c, p in state.terms)


def current(state, x, t):
    """(1/m) Im(psi* dpsi/dx) from the analytic derivative."""
    state = _as_sum(state)
    psi, dpsi = state.amplitude_and_derivative(x, t)
    return np.imag(np.conj(psi) * dpsi) / state.mass


def continuity_residual(state, x, t, h=1e-4):
    """|d_t rho + d_x j| by central differences in both variables."""
    drho = (density(state, x, t + h) - density(state, x, t - h)) / (2 * h)
    dj = (current(state, x + h, t) - current(state, x - h, t)) / (2 * h)
    return np.abs(drho + dj)


def momentum_probability_negative(state):
    """P(p < 0) in closed form for a single packet or as a quadrature otherwise."""
    state = _as_sum(state)
    if len(state.terms) == 1:
        c, p = state.terms[0]
        # |p~|^2 = sqrt(2/pi) sigma exp(-2 sigma^2 (k-k0)^2)
        return abs(c) ** 2 * 0.5 * special.erfc(math.sqrt(2.0) * p.sigma0 * p.k0)
    from .numerics import integrate_adaptive
    cut = min(p.k0 - 12.0 / p.sigma0 for _, p in state.terms)
    lo = min(cut, 0.0)
    f = lambda k: float(np.abs(momentum_amplitude(state, k)) ** 2)
    return integrate_adaptive(f, lo, 0.0, tol=1e-14).value if lo < 0 else 0.0


# ---------------------------------------------------------------- two dimensions

@dataclass(frozen=True)
class Packet2D:
    """Product of a longitudinal and a transverse Gaussian in rotated coordinates.

    The packet is evaluated at x' = cos(theta)(x - ox) - sin(theta)(z - oz),
    z' = cos(theta)(z - oz) + sin(theta)(x - ox) and time t - start_time.
    """
    longitudinal: FreeGaussian1D
    transverse: FreeGaussian1D
    theta: float = 0.0
    origin: tuple = (0.0, 0.0)
    start_time: float = 0.0

    def rotated(self, x, z):
        ox, oz = self.origin
        c, s = math.cos(self.theta), math.sin(self.theta)
        dx, dz = np.asarray(x, dtype=float) - ox, np.asarray(z, dtype=float) - oz
        return c * dx - s * dz, c * dz + s * dx

    def amplitude_and_gradient(self, x, z, t):
        xr, zr = self.rotated(x, z)
        tt = np.asarray(t, dtype=float) - self.start_time
        gx, dgx = self.transverse.amplitude_and_derivative(xr, tt)
        gz, dgz = self.longitudinal.amplitude_and_derivative(zr, tt)
        psi = gx * gz
        d_xr, d_zr = dgx * gz, gx * dgz
        c, s = math.cos(self.theta), math.sin(self.theta)
        # chain rule through the rotation
        return psi, c * d_xr + s * d_zr, -s * d_xr + c * d_zr

    def momentum_amplitude(self, kx, kz):
        """Fourier transform at time zero of the lab-frame wave function."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        kxr = c * np.asarray(kx) - s * np.asarray(kz)
        kzr = s * np.asarray(kx) + c * np.asarray(kz)
        ox, oz = self.origin
        amp = (self.transverse.momentum_amplitude(kxr, -self.start_time)
               * self.longitudinal.momentum_amplitude(kzr, -self.start_time))
        return amp * np.exp(-1j * (np.asarray(kx) * ox + np.asarray(kz) * oz))


@dataclass(frozen=True)
class State2D:
    terms: tuple    # ((coefficient, Packet2D), ...)

    @property
    def mass(self):
        return self.terms[0][1].longitudinal.mass

    def amplitude_and_gradient(self, x, z, t):
        psi = dx = dz = 0j
        for c, p in self.terms:
            a, gx, gz = p.amplitude_and_gradient(x, z, t)
            psi, dx, dz = psi + c * a, dx + c * gx, dz + c * gz
        return psi, dx, dz

    def momentum_amplitude(self, kx, kz):
        return sum(c * p.momentum_amplitude(kx, kz) for c, p in self.terms)


def amplitude2d(state, x, z, t):
    return state.amplitude_and_gradient(x, z, t)[0]


def current2d(state, x, z, t):
    psi, dx, dz = state.amplitude_and_gradient(x, z, t)
    m = state.mass
    return np.imag(np.conj(psi) * dx) / m, np.imag(np.conj(psi) * dz) / m


def converging_double_slit(sigma_l, sigma_t, v, d, delta, theta, mass=1.0, phase=0.0):
    """Two arms: arm 1 starts at (d, 0) at time delta/v moving along z; arm 2
    passes the origin at t = 0 moving along the direction rotated by theta.
    phase is the relative beam-splitter phase on arm 1."""
    t1 = delta / v
    arm1 = Packet2D(FreeGaussian1D(0.0, v, sigma_l, mass), FreeGaussian1D(0.0, 0.0, sigma_t, mass),
                    0.0, (d, 0.0), t1)
    arm2 = Packet2D(FreeGaussian1D(0.0, v, sigma_l, mass), FreeGaussian1D(0.0, 0.0, sigma_t, mass),
                    theta, (0.0, 0.0), 0.0)
    return State2D(((complex(np.exp(1j * phase)), arm1), (1.0 + 0j, arm2)))


# ---------------------------------------------------------------- spinors

@dataclass(frozen=True)
class SpinorState:
    """Two z-spin channels in a field B along z; channel s picks up e^{i s B t}."""
    up: WavePacketSum
    down: WavePacketSum
    field: float = 0.0

    @property
    def mass(self):
        return self.up.mass

    def channels(self, z, t):
        up, dup = self.up.amplitude_and_derivative(z, t)
        dn, ddn = self.down.amplitude_and_derivative(z, t)
        pu = np.exp(1j * self.field * np.asarray(t))
        return up * pu, dup * pu, dn / pu, ddn / pu


def spinor_channel_xplus(state, z, t, with_derivative=False):
    """psi_{x,+} = (psi_{z,+} + psi_{z,-}) / sqrt 2."""
    up, dup, dn, ddn = state.channels(z, t)
    r = math.sqrt(2.0)
    if with_derivative:
        return (up + dn) / r, (dup + ddn) / r
    return (up + dn) / r


def spinor_current_xplus(state, z, t):
    psi, dpsi = spinor_channel_xplus(state, z, t, with_derivative=True)
    return np.imag(np.conj(psi) * dpsi) / state.mass
