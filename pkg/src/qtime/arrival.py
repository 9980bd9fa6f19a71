"""Arrival-time densities at a detector for free packet states (hbar = 1).

Three candidate densities are compared: the semiclassical momentum
rescaling, the flux of the probability current and the Kijowski density.
Backflow is quantified by the amount of negative flux through the
detector during a window.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import packets
from .numerics import NumericFailure, integrate_adaptive

log = logging.getLogger(__name__)


def _require_positive_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("arrival densities need t > 0")
    return t


@dataclass(frozen=True)
class ArrivalWindow:
    detector: float
    t_start: float = 0.0
    t_end: float = 1.0

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("window must have t_end > t_start")

    @classmethod
    def for_pair(cls, detector, x_far, k_far, sigma, closing="front"):
        """Window (0, T) with T = (|D - x_far| -+ 3 sigma) / (k_far + 5/12).

        x_far, k_far describe the packet furthest from the detector.  With
        closing="front" the window ends when that packet's 3-sigma front
        reaches D; closing="tail" waits until its 3-sigma tail has passed.
        """
        if closing not in ("front", "tail"):
            raise ValueError(f"unknown closing {closing!r}")
        reach = -3.0 * sigma if closing == "front" else 3.0 * sigma
        T = (abs(detector - x_far) + reach) / (k_far + 5.0 / 12.0)
        if not T > 0:
            raise ValueError(f"packet starts within 3 sigma of the detector (T = {T})")
        return cls(detector, 0.0, T)

    @property
    def length(self):
        return self.t_end - self.t_start


# ---------------------------------------------------------------- densities

def semiclassical_density(state, L, t):
    """(mL/t^2) |psi~(mL/t)|^2 with psi~ the unitary momentum amplitude at t = 0."""
    if not L > 0:
        raise ValueError("L must be positive")
    t = _require_positive_time(t)
    m = packets._as_sum(state).mass
    k = m * L / t
    return m * L / t ** 2 * np.abs(packets.momentum_amplitude(state, k)) ** 2


@dataclass(frozen=True)
class FluxDensity:
    state: object
    window: ArrivalWindow
    total: float

    def raw(self, t):
        return packets.current(self.state, self.window.detector, t)

    def normalized(self, t):
        return self.raw(t) / self.total


def flux_density(state, window, tol=1e-12):
    """Current through the detector, raw and normalised to one on the window."""
    f = lambda t: float(packets.current(state, window.detector, t))
    pts = list(np.linspace(window.t_start, window.t_end, 66)[1:-1])
    total = 0.0
    for a, b in zip([window.t_start] + pts, pts + [window.t_end]):
        total += integrate_adaptive(f, a, b, tol=tol, limit=400).value
    scale = max(abs(f(t)) for t in np.linspace(window.t_start, window.t_end, 401)) * window.length
    if abs(total) <= 1e-13 * max(scale, 1e-300):
        raise NumericFailure(f"total flux through D={window.detector} vanishes on the window")
    return FluxDensity(state, window, total)


def _support(state, spread=8.0):
    """Momentum intervals (lo, hi) carrying the amplitude, one per packet, merged."""
    state = packets._as_sum(state)
    iv = sorted((p.k0 - spread / p.sigma0, p.k0 + spread / p.sigma0) for _, p in state.terms)
    merged = [list(iv[0])]
    for lo, hi in iv[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return merged


def _gl_panels(lo, hi, n_panels, order=48):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def kijowski_density(state, D, t, panels=None):
    """Sum over both momentum half-lines of (1/(2 pi m)) |int sqrt|p| phi_t(p) dp|^2.

    phi_t is the unitary momentum amplitude of the state translated so the
    detector sits at the origin.  On each half-line p = +-s^2, which turns
    sqrt|p| dp into 2 s^2 ds and removes the square-root endpoint.
    """
    st = packets._as_sum(state).shifted(dx=-D)
    m = st.mass
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros(t.shape)
    tmax = float(np.max(np.abs(t)))
    for sign in (1.0, -1.0):
        nodes, weights = [], []
        for lo, hi in _support(st):
            # portion of [lo, hi] on this half-line, as an s-interval
            a, b = (max(lo, 0.0), max(hi, 0.0)) if sign > 0 else (max(-hi, 0.0), max(-lo, 0.0))
            if b <= a:
                continue
            # the phase p^2 t / 2m sweeps (b^2 - a^2) |t| / 2m radians
            n = panels or int(min(4000, 4 + (b * b - a * a) * tmax / (2 * m) / 20 + 2 * (b - a)))
            s, w = _gl_panels(math.sqrt(a), math.sqrt(b), n)
            nodes.append(s)
            weights.append(w)
        if not nodes:
            continue
        s, w = np.concatenate(nodes), np.concatenate(weights)
        p = sign * s * s
        phi0 = packets.momentum_amplitude(st, p) * (2.0 * s * s * w)
        for i in range(0, t.size, 256):
            tt = t[i:i + 256]
            vals = np.exp(-0.5j * np.outer(tt, p * p) / m) @ phi0
            out[i:i + 256] += np.abs(vals) ** 2
    return out / (2.0 * math.pi * m) if out.size > 1 else float(out[0] / (2.0 * math.pi * m))


# ---------------------------------------------------------------- backflow

def _negative_intervals(f, a, b, n_grid):
    ts = np.linspace(a, b, n_grid)
    vals = np.array([f(t) for t in ts])
    neg = vals < 0
    out = []
    i = 0
    while i < n_grid:
        if not neg[i]:
            i += 1
            continue
        j = i
        while j + 1 < n_grid and neg[j + 1]:
            j += 1
        lo = a if i == 0 else optimize.brentq(f, ts[i - 1], ts[i], xtol=1e-14, rtol=1e-14)
        hi = b if j == n_grid - 1 else optimize.brentq(f, ts[j], ts[j + 1], xtol=1e-14, rtol=1e-14)
        out.append((lo, hi))
        i = j + 1
    return out


def negative_flux(state, window, n_grid=4001, tol=1e-12):
    """Total negative current through the detector over the window.

    Zeros of j(D, t) are bracketed on a grid and refined by Brent's
    method; |j| is then integrated over each negative stretch, where it
    is smooth.
    """
    f = lambda t: float(packets.current(state, window.detector, t))
    total = 0.0
    for lo, hi in _negative_intervals(f, window.t_start, window.t_end, n_grid):
        if hi > lo:
            total += -integrate_adaptive(f, lo, hi, tol=tol).value
    return max(total, 0.0)


def origin_phased(packet):
    """The packet times e^{i k0 x0}: its plane wave is e^{i k0 x} rather than
    e^{i k0 (x - x0)}, so two such packets carry no position-dependent
    relative phase."""
    return packets.WavePacketSum.single(packet, np.exp(1j * packet.k0 * packet.x0))


def _pair(g1, g2, sign):
    a = packets._as_sum(g1)
    b = packets._as_sum(g2)
    return a + b if sign > 0 else a - b


def interference_metric(g1, g2, window, n_grid=4001, convention="exclude_one_sided"):
    """M = (N_{g1+g2} + N_{g1-g2}) chi.

    convention="exclude_one_sided": chi = 0 when exactly one of the N vanishes, 1 otherwise.
    convention="only_one_sided":    chi = 1 when exactly one of the N vanishes, 0 otherwise.
    """
    for g in (g1, g2):
        if len(packets._as_sum(g).terms) != 1:
            raise ValueError("interference_metric takes single packets")
    n_plus = negative_flux(_pair(g1, g2, 1), window, n_grid)
    n_minus = negative_flux(_pair(g1, g2, -1), window, n_grid)
    exactly_one = (n_plus == 0.0) != (n_minus == 0.0)
    if convention == "exclude_one_sided":
        chi = 0.0 if exactly_one else 1.0
    elif convention == "only_one_sided":
        chi = 1.0 if exactly_one else 0.0
    else:
        raise ValueError(f"unknown convention {convention!r}")
    return (n_plus + n_minus) * chi


def threshold_pair(k, sigma, geometry=(4.0, -4.0, 10.0), mass=1.0):
    """Equal-momentum pair at x1, x2 (common plane wave) and the window for a detector at D."""
    x1, x2, D = geometry
    g1 = origin_phased(packets.FreeGaussian1D(x1, k / mass, sigma, mass))
    g2 = origin_phased(packets.FreeGaussian1D(x2, k / mass, sigma, mass))
    far = x1 if abs(D - x1) > abs(D - x2) else x2
    return g1, g2, ArrivalWindow.for_pair(D, far, k, sigma)


def pair_negative_flux(k, sigma, geometry=(4.0, -4.0, 10.0), n_grid=4001):
    g1, g2, w = threshold_pair(k, sigma, geometry)
    return (negative_flux(_pair(g1, g2, 1), w, n_grid),
            negative_flux(_pair(g1, g2, -1), w, n_grid))


def backflow_threshold(sigma, geometry=(4.0, -4.0, 10.0), bracket=(0.0, 8.0), xtol=1e-3,
                       n_grid=4001):
    """Smallest k above which neither g1+g2 nor g1-g2 has negative flux."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    free = lambda k: pair_negative_flux(k, sigma, geometry, n_grid) == (0.0, 0.0)
    lo, hi = bracket
    if free(lo) or not free(hi):
        raise NumericFailure(f"no change of the backflow predicate on k in [{lo}, {hi}]")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if free(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- feasibility

@dataclass(frozen=True)
class Condition:
    satisfied: bool
    margin: float


@dataclass(frozen=True)
class FeasibilityReport:
    cond_separation: Condition
    cond_momentum: Condition
    cond_fringe_resolvable: Condition

    @property
    def all_satisfied(self):
        return all(c.satisfied for c in (self.cond_separation, self.cond_momentum,
                                         self.cond_fringe_resolvable))


def overtaking_feasibility(sigma1, delta, L, v1, mass, tau_detector, safety=1.0, v2=None):
    """Margins (>= 1 when met) of the three conditions for resolving the overtaking fringes:
    sigma1 <= delta/6, m v1 >= 3 L/(delta sigma1), m v1^2/2 <= pi L/(delta tau).

    The second and third use v2 - v1 = delta v1 / L, i.e. both centres reaching
    the detector together.  Passing v2 evaluates them with the actual momentum
    gap m |v2 - v1| instead.
    """
    for name, val in (("sigma1", sigma1), ("delta", delta), ("L", L), ("v1", v1), ("mass", mass)):
        if not val > 0:
            raise ValueError(f"{name} must be positive")
    if tau_detector < 0:
        raise ValueError("tau_detector must be non-negative")

    def cond(margin):
        return Condition(bool(margin >= 1.0), float(margin))

    dk = mass * (abs(v2 - v1) if v2 is not None else delta * v1 / L)
    m1 = delta / (6.0 * sigma1) / safety
    m2 = dk / (3.0 / sigma1) / safety
    # fringe period 2 pi / (dk v1) against the detector resolution
    m3 = math.inf if tau_detector == 0 else 2 * math.pi / (dk * v1 * tau_detector) / safety
    return FeasibilityReport(cond(m1), cond(m2), cond(m3))


# ---------------------------------------------------------------- two dimensions

def _quadratic_form(packet, t):
    """Exponent of the time-t momentum amplitude of a Packet2D as
    -axx kx^2 - axz kx kz - azz kz^2 + bx kx + bz kz + c, with prefactor."""
    lon, tr = packet.longitudinal, packet.transverse
    m = lon.mass
    c, s = math.cos(packet.theta), math.sin(packet.theta)
    ox, oz = packet.origin

    def one_d(p, tau):
        # -(sigma^2 + i tau/2m) k^2 + (2 sigma^2 k0 - i x0) k - sigma^2 k0^2
        return (p.sigma0 ** 2 + 0.5j * (tau - p.t0) / m, 2 * p.sigma0 ** 2 * p.k0 - 1j * p.x0,
                -p.sigma0 ** 2 * p.k0 ** 2)

    tau = t - packet.start_time
    P, bP, cP = one_d(tr, tau)      # in kxr = c kx - s kz
    Q, bQ, cQ = one_d(lon, tau)     # in kzr = s kx + c kz
    axx = P * c * c + Q * s * s
    axz = 2 * c * s * (Q - P)
    azz = P * s * s + Q * c * c
    bx = bP * c + bQ * s - 1j * ox
    bz = -bP * s + bQ * c - 1j * oz
    pref = packets._QUARTER ** 2 * 2.0 * math.sqrt(tr.sigma0 * lon.sigma0)
    return axx, axz, azz, bx, bz, cP + cQ, pref


def momentum_amplitude_2d(state, kx, kz, t=0.0):
    """Unitary 2D momentum amplitude of the state at time t."""
    kx, kz = np.asarray(kx, dtype=float), np.asarray(kz, dtype=float)
    out = 0j
    for coef, p in state.terms:
        axx, axz, azz, bx, bz, c0, pref = _quadratic_form(p, t)
        out = out + coef * pref * np.exp(-axx * kx * kx - axz * kx * kz - azz * kz * kz
                                         + bx * kx + bz * kz + c0)
    return out


def partial_transform_z(state, x, kz, t):
    """(2 pi)^{-1/2} int Psi(x, z, t) e^{-i kz z} dz, from the Gaussian integral over kx."""
    x, kz = np.asarray(x, dtype=float), np.asarray(kz, dtype=float)
    out = 0j
    for coef, p in state.terms:
        axx, axz, azz, bx, bz, c0, pref = _quadratic_form(p, t)
        B = bx - axz * kz + 1j * x
        out = out + coef * pref / math.sqrt(2 * math.pi) * np.sqrt(np.pi / axx) * np.exp(
            B * B / (4 * axx) - azz * kz * kz + bz * kz + c0)
    return out


def _transverse_range(state, L, t, spread=8.0):
    lo, hi = math.inf, -math.inf
    for _, p in state.terms:
        # transverse centre of the arm where its axis meets z = L, or its current centre
        tr = p.transverse
        tau = t - p.start_time
        width = float(tr.width(tau))
        c, s = math.cos(p.theta), math.sin(p.theta)
        ox, oz = p.origin
        zr = p.longitudinal.x0 + p.longitudinal.v * tau
        xc = [ox + s * zr, ox + (L - oz) * math.tan(p.theta) if abs(c) > 1e-12 else ox]
        reach = spread * max(width, float(p.longitudinal.width(tau)) * abs(s))
        lo = min(lo, min(xc) - reach)
        hi = max(hi, max(xc) + reach)
    return lo, hi


def slit_flux(state, L, t, tol=1e-10, max_panels=1 << 15):
    """int j_z(x, L, t) dx over the transverse range carrying the arms (8 widths).

    The integrand oscillates with the transverse momentum gap between the
    arms, so composite Gauss-Legendre panels are doubled until two
    successive estimates agree.
    """
    lo, hi = _transverse_range(state, L, t)
    f = lambda x: packets.current2d(state, x, L, t)[1]
    n = 16
    prev = None
    while n <= max_panels:
        x, w = _gl_panels(lo, hi, n, order=32)
        val = float(np.sum(w * f(x)))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev, n = val, 2 * n
    raise NumericFailure(f"transverse flux integral not converged at t={t} ({max_panels} panels)")


def joint_far(state, L, t, x):
    """|Psi~(m x/t, m L/t)|^2 |dk(L,t)/dt| |dk(x,t)/dx|."""
    t = _require_positive_time(t)
    m = state.mass
    amp = momentum_amplitude_2d(state, m * np.asarray(x) / t, m * L / t)
    return np.abs(amp) ** 2 * (m * L / t ** 2) * (m / t)


def joint_mixed(state, L, t, x):
    """|F_z[Psi](x, m L/t, t)|^2 |dk(L,t)/dt|."""
    t = _require_positive_time(t)
    m = state.mass
    return np.abs(partial_transform_z(state, x, m * L / t, t)) ** 2 * (m * L / t ** 2)


def joint_far_marginal(state, L, t):
    """x-marginal of joint_far: (mL/t^2) int |Psi~(kx, mL/t)|^2 dkx."""
    t = float(_require_positive_time(t))
    m = state.mass
    kz = m * L / t
    lo = min(p.transverse.k0 - 10 / p.transverse.sigma0 - abs(p.longitudinal.k0 * math.sin(p.theta))
             - 10 / p.longitudinal.sigma0 for _, p in state.terms)
    hi = max(p.transverse.k0 + 10 / p.transverse.sigma0 + abs(p.longitudinal.k0 * math.sin(p.theta))
             + 10 / p.longitudinal.sigma0 for _, p in state.terms)
    kx, w = _gl_panels(lo, hi, 64)
    return m * L / t ** 2 * float(np.sum(w * np.abs(momentum_amplitude_2d(state, kx, kz)) ** 2))


def double_slit_densities(state, L, t):
    """Flux through z = L at time t plus the two joint (t, x) densities as callables."""
    t = float(_require_positive_time(t))
    return {
        "flux": slit_flux(state, L, t),
        "joint_far": lambda x: joint_far(state, L, t, x),
        "joint_mixed": lambda x: joint_mixed(state, L, t, x),
    }


# ---------------------------------------------------------------- spin

def _support_overlap(a, b):
    """Bhattacharyya coefficient of two momentum densities."""
    lo = min(iv[0] for iv in _support(a) + _support(b))
    hi = max(iv[1] for iv in _support(a) + _support(b))
    k, w = _gl_panels(lo, hi, 64)
    pa = np.abs(packets.momentum_amplitude(a, k))
    pb = np.abs(packets.momentum_amplitude(b, k))
    na, nb = math.sqrt(np.sum(w * pa * pa)), math.sqrt(np.sum(w * pb * pb))
    return float(np.sum(w * pa * pb) / (na * nb))


def pauli_arrival(state, L, t, overlap_limit=1e-3):
    """Semiclassical and flux densities of the x-spin-up channel at the detector L."""
    t = _require_positive_time(t)
    ov = _support_overlap(state.up, state.down)
    if ov > overlap_limit:
        warnings.warn(f"spin channels overlap in momentum (coefficient {ov:.3g}); "
                      "the semiclassical density assumes separated supports", stacklevel=2)
    m = state.mass
    k = m * L / t
    semi = 0.5 * m * L / t ** 2 * (np.abs(packets.momentum_amplitude(state.up, k)) ** 2
                                  + np.abs(packets.momentum_amplitude(state.down, k)) ** 2)
    return {"semiclassical": semi, "flux": packets.spinor_current_xplus(state, L, t)}


# ---------------------------------------------------------------- presets

def double_gaussian(sigma=4.5, L=215.0, delta=35.0, v1=2.45, v2=3.2, mass=1.0):
    """Slow packet at -L and fast packet at -L-delta, equal weights, detector at 0."""
    g1 = packets.FreeGaussian1D(-L, v1, sigma, mass)
    g2 = packets.FreeGaussian1D(-L - delta, v2, sigma, mass)
    return packets.WavePacketSum(((1.0, g1), (1.0, g2))).scaled(1.0 / math.sqrt(2.0))


def backflow_state():
    """Two right-movers whose interference makes the current at x = 0 negative near t = 5.2."""
    g1 = packets.FreeGaussian1D(-10.0, 2.0, 3.0, 1.0)
    g2 = packets.FreeGaussian1D(-34.0, 6.0, 3.0, 1.0)
    return packets.WavePacketSum(((1.0, g1), (1.0, g2))).scaled(1.0 / math.sqrt(2.0))


def crossing_time(k1, D, sigma=1.0, mass=1.0):
    """t_c with k1 t_c / m = D + sigma_t(t_c) for a packet starting at 0."""
    f = lambda t: k1 * t / mass - D - sigma * math.sqrt(1 + (t / (2 * mass * sigma ** 2)) ** 2)
    hi = 1.0
    while f(hi) < 0:
        hi *= 2
    return optimize.brentq(f, 0.0, hi, xtol=1e-14)


def velocity_pair(k1, k2, D=40.0, sigma=1.0, mass=1.0, closing="front"):
    """Packet g1 at 0 with momentum k1 and g2 behind it with momentum k2, placed
    so that their maxima meet at D + sigma_t(t_c)."""
    tc = crossing_time(k1, D, sigma, mass)
    x2 = (k1 - k2) * tc / mass
    g1 = origin_phased(packets.FreeGaussian1D(0.0, k1 / mass, sigma, mass))
    g2 = origin_phased(packets.FreeGaussian1D(x2, k2 / mass, sigma, mass))
    return g1, g2, ArrivalWindow.for_pair(D, x2, k2, sigma, closing)


def local_maxima(values, rel_floor=1e-3):
    """Indices of strict interior local maxima above rel_floor * max."""
    v = np.asarray(values, dtype=float)
    floor = rel_floor * np.max(np.abs(v))
    inner = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]) & (v[1:-1] > floor)
    return np.nonzero(inner)[0] + 1
