"""Jost functions of piecewise-constant radial potentials (s-wave, hbar = 1, m = 1/2).

The regular solution phi (phi(0) = 0, phi'(0) = 1) is carried through each
step with the entire functions cos(d*sqrt(z)) and sin(d*sqrt(z))/sqrt(z) of
z = k^2 - V, so no square-root branch ever matters.  Derivatives in k are
carried along as truncated Taylor series ("jets").

Three arithmetic back ends share the code: python complex (scalar, fast),
numpy arrays (vectorised grids) and mpmath (extended precision, and huge
exponents in the deep lower half plane).
"""

from __future__ import annotations

import cmath
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import mpmath
import numpy as np
from scipy import optimize

from .numerics import (NumericFailure, PrecisionPolicy, Rect, count_zeros_argument_principle,
                       refine_zero)

# resonances next to the real axis are stored to this precision, enough for
# evaluating poles of order three right beside them
PRECISE_BITS = 448
PRECISE_DIGITS = 130

# |z| d^2 below this uses the power series of the step functions
SERIES_CUTOFF = 4.0


@dataclass(frozen=True)
class StepPotential:
    """V(r) = values[i] on (edges[i], edges[i+1]); zero beyond edges[-1]."""

    edges: tuple
    values: tuple

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)
        if len(edges) != len(values) + 1 or edges[0] != 0.0:
            raise ValueError("need edges 0 = r0 <= r1 <= ... and one value per interval")
        if any(b < a for a, b in zip(edges, edges[1:])):
            raise ValueError("edges must be non-decreasing")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("potential values must be finite")

    @property
    def support_radius(self):
        return self.edges[-1]

    @property
    def widths(self):
        return [b - a for a, b in zip(self.edges, self.edges[1:])]

    @property
    def l1_norm(self):
        return sum(abs(v) * w for v, w in zip(self.values, self.widths))

    @property
    def r_l1_norm(self):
        return sum(abs(v) * (b * b - a * a) / 2 for v, a, b in zip(self.values, self.edges, self.edges[1:]))

    def regions(self):
        return [(w, v) for w, v in zip(self.widths, self.values) if w > 0]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for a, b, v in zip(self.edges, self.edges[1:], self.values):
            out = np.where((r > a) & (r <= b), v, out)
        return out

    def require_nontrivial(self):
        if self.l1_norm <= 0:
            raise ValueError("potential has zero L1 norm")

    def to_dict(self):
        return {"edges": list(self.edges), "values": list(self.values)}


def barrier(r1, r2, v0):
    """Zero on [0, r1], v0 on (r1, r2]."""
    return StepPotential((0.0, r1, r2), (0.0, v0))


def ball(a, v0):
    return StepPotential((0.0, a), (v0,))


# ---------------------------------------------------------------- back ends

class _Scalar:
    sqrt = staticmethod(cmath.sqrt)
    cos = staticmethod(cmath.cos)
    sin = staticmethod(cmath.sin)
    exp = staticmethod(cmath.exp)
    i = 1j

    @staticmethod
    def const(x):
        return complex(x)


class _Mp:
    sqrt = staticmethod(mpmath.sqrt)
    cos = staticmethod(mpmath.cos)
    sin = staticmethod(mpmath.sin)
    exp = staticmethod(mpmath.exp)
    i = mpmath.mpc(0, 1)

    @staticmethod
    def const(x):
        return mpmath.mpc(x)


def _backend(k):
    if isinstance(k, (mpmath.mpf, mpmath.mpc)):
        return _Mp
    if isinstance(k, np.ndarray):
        return None
    return _Scalar


# ---------------------------------------------------------------- jets

def _jmul(a, b):
    n = len(a)
    return [sum(a[i] * b[j - i] for i in range(j + 1)) for j in range(n)]


def _jadd(a, b):
    return [x + y for x, y in zip(a, b)]


def _jscale(a, c):
    return [x * c for x in a]


def _jdiv(a, b):
    n = len(a)
    out = []
    for j in range(n):
        acc = a[j] - sum(out[i] * b[j - i] for i in range(j))
        out.append(acc / b[0])
    return out


def _compose(derivs, delta):
    """Jet of g(z0 + delta) from g^(j)(z0); delta has zero constant term."""
    n = len(delta)
    out = [derivs[0]] + [0 * derivs[0]] * (n - 1)
    power = [1] + [0] * (n - 1)
    fact = 1
    for j in range(1, n):
        power = _jmul(power, delta)
        fact *= j
        out = _jadd(out, _jscale(power, derivs[j] / fact))
    return out


def _series_derivs(z, d, order, mp=False):
    """Derivatives of cos(d sqrt z) and sin(d sqrt z)/sqrt z from their power series.

    Summed in x = z d^2, where both are entire with factorial decay, then
    rescaled by d^(2j) for the j-th z-derivative.
    """
    n_terms = 40 + (mpmath.mp.prec // 8 if mp else 0)
    fact = (lambda n: mpmath.factorial(n)) if mp else math.factorial
    x = z * d * d
    cs, ss = [], []
    for j in range(order + 1):
        c = 0 * x
        s = 0 * x
        for m in range(n_terms - 1, j - 1, -1):
            ff = fact(m) / fact(m - j)
            c = c * x + (-1) ** m * ff / fact(2 * m)
            s = s * x + (-1) ** m * ff / fact(2 * m + 1)
        scale = d ** (2 * j)
        cs.append(c * scale)
        ss.append(s * scale * d)
    return cs, ss


def _closed_derivs(z, d, order, xp):
    w = xp.sqrt(z)
    c = xp.cos(d * w)
    s = xp.sin(d * w) / w
    cs, ss = [c], [s]
    for j in range(order):
        cs.append(-0.5 * d * ss[j])
        ss.append((d * cs[j] - (2 * j + 1) * ss[j]) / (2 * z))
    return cs, ss


def _step_derivs(z, d, order, xp):
    if xp is None:
        small = np.abs(z) * d * d < SERIES_CUTOFF
        cs = [np.empty_like(z) for _ in range(order + 1)]
        ss = [np.empty_like(z) for _ in range(order + 1)]
        if small.any():
            c1, s1 = _series_derivs(z[small], d, order)
            for j in range(order + 1):
                cs[j][small], ss[j][small] = c1[j], s1[j]
        if (~small).any():
            with np.errstate(all="ignore"):
                c2, s2 = _closed_derivs(z[~small], d, order, np)
            for j in range(order + 1):
                cs[j][~small], ss[j][~small] = c2[j], s2[j]
        return cs, ss
    if abs(z) * d * d < SERIES_CUTOFF:
        return _series_derivs(z, d, order, mp=xp is _Mp)
    return _closed_derivs(z, d, order, xp)


def _k_jet(k, order):
    one = 1 + 0 * k
    return [k, one] + [0 * k] * (order - 1) if order >= 1 else [k]


def _propagate(pot, k, order, xp):
    """Jets of (phi, phi') at R_V, plus the jet of k."""
    kj = _k_jet(k, order)
    k2 = _jmul(kj, kj)
    zero = 0 * k
    phi = [zero] * (order + 1)
    dphi = [zero + 1] + [zero] * order
    for width, v in pot.regions():
        zj = [k2[0] - v] + k2[1:]
        cs, ss = _step_derivs(zj[0], width, order, xp)
        delta = [zero] + zj[1:]
        cj = _compose(cs, delta)
        sj = _compose(ss, delta)
        phi, dphi = (_jadd(_jmul(cj, phi), _jmul(sj, dphi)),
                     _jadd(_jscale(_jmul(zj, _jmul(sj, phi)), -1), _jmul(cj, dphi)))
    return phi, dphi, kj


def _exp_jet(k, R, order, xp):
    i = 1j if xp is None else xp.i
    e0 = np.exp(1j * R * k) if xp is None else xp.exp(i * R * k)
    out = [e0]
    for j in range(1, order + 1):
        out.append(out[-1] * (i * R) / j)
    return out


def jost_jet(pot, k, order=1):
    """Taylor coefficients [F, F', F''/2, ...] of the Jost function at k."""
    xp = _backend(k)
    if xp is None:
        k = np.asarray(k, dtype=complex)
    elif xp is _Scalar:
        k = complex(k)
    phi, dphi, kj = _propagate(pot, k, order, xp)
    i = 1j if xp is None else xp.i
    inner = _jadd(dphi, _jscale(_jmul(kj, phi), -i))
    return _jmul(_exp_jet(k, pot.support_radius, order, xp), inner)


def jost_f(pot, k, with_derivative=False):
    """F(k) = W(f, phi); with_derivative returns (F, dF/dk)."""
    jet = jost_jet(pot, k, 1 if with_derivative else 0)
    if with_derivative:
        return jet[0], jet[1]
    return jet[0]


def jost_derivatives(pot, k, order):
    """[F, F', ..., F^(order)] at k."""
    jet = jost_jet(pot, k, order)
    return [c * math.factorial(j) for j, c in enumerate(jet)]


def jost_barrier_closed_form(r1, r2, v0, k):
    """Closed-form Jost function of the single barrier, used as an oracle."""
    k = complex(k)
    q = cmath.sqrt(k * k - v0)
    d = r2 - r1
    return cmath.exp(1j * k * r2) * (cmath.exp(-1j * k * r1) * cmath.cos(d * q)
                                     - 1j * (k / q) * cmath.cos(k * r1) * cmath.sin(d * q)
                                     - (q / k) * cmath.sin(k * r1) * cmath.sin(d * q))


def regular_solution(pot, k, r):
    """(phi(k, r), phi'(k, r)) at a single radius."""
    xp = _backend(k) or _Scalar
    k = k if xp is _Mp else complex(k)
    phi, dphi = 0 * k, 1 + 0 * k
    for a, b, v in zip(pot.edges, pot.edges[1:], pot.values):
        if r <= a:
            break
        width = min(r, b) - a
        if width <= 0:
            continue
        z = k * k - v
        (c,), (s,) = _step_derivs(z, width, 0, xp)
        phi, dphi = c * phi + s * dphi, -z * s * phi + c * dphi
    if r > pot.support_radius:
        width = r - pot.support_radius
        z = k * k
        (c,), (s,) = _step_derivs(z, width, 0, xp)
        phi, dphi = c * phi + s * dphi, -z * s * phi + c * dphi
    return phi, dphi


def gamow_function(pot, k, r):
    """(f(k, r), f'(k, r)) with f = exp(ikr) beyond the support, propagated inwards."""
    xp = _backend(k) or _Scalar
    k = k if xp is _Mp else complex(k)
    R = pot.support_radius
    if r >= R:
        e = xp.exp(xp.i * k * r)
        return e, xp.i * k * e
    f = xp.exp(xp.i * k * R)
    df = xp.i * k * f
    for a, b, v in reversed(list(zip(pot.edges, pot.edges[1:], pot.values))):
        if b <= r:
            break
        width = b - max(a, r)
        if width <= 0:
            continue
        z = k * k - v
        (c,), (s,) = _step_derivs(z, width, 0, xp)
        # inverse of the forward step matrix [[c, s], [-z s, c]]
        f, df = c * f - s * df, z * s * f + c * df
    return f, df


def wronskian(pot, k, r):
    """W(f, phi) = f phi' - f' phi at radius r."""
    f, df = gamow_function(pot, k, r)
    phi, dphi = regular_solution(pot, k, r)
    return f * dphi - df * phi


def s_matrix(pot, k):
    fk = jost_f(pot, k)
    if np.any(fk == 0):
        raise ZeroDivisionError("F(k) = 0: the S-matrix has a pole here")
    return jost_f(pot, -k) / fk


def s_matrix_derivatives(pot, k, order=3):
    """[S, S', S'', S'''] at real k from F-jets at k and -k."""
    fp = jost_jet(pot, k, order)
    fm = jost_jet(pot, -k, order)
    # F(-k - e) as a jet in e flips odd coefficients
    fm = [c * (-1) ** j for j, c in enumerate(fm)]
    sj = _jdiv(fm, fp)
    return [c * math.factorial(j) for j, c in enumerate(sj)]


# ---------------------------------------------------------------- spectral data

@dataclass
class SpectralData:
    bound: list
    virtual: list
    resonances: list          # (alpha, beta) pairs, ordered by modulus
    lam: int
    search_region: tuple
    certified_count: int
    uncovered: list = field(default_factory=list)
    precise: dict = field(default_factory=dict)   # index -> (re, im) strings at full precision

    def zeros(self):
        return [complex(a, -b) for a, b in self.resonances]

    def zeros_mp(self):
        """Resonances as mpmath numbers, at full precision where it was recorded."""
        out = []
        for i, (a, b) in enumerate(self.resonances):
            if i in self.precise:
                re, im = self.precise[i]
                out.append(mpmath.mpc(mpmath.mpf(re), mpmath.mpf(im)))
            else:
                out.append(mpmath.mpc(a, -b))
        return out

    def to_json(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["resonances"] = [list(map(float, p)) for p in self.resonances]
        d["search_region"] = list(self.search_region)
        d["precise"] = {str(i): v for i, v in self.precise.items()}
        return json.dumps(d, indent=2)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(bound=d["bound"], virtual=d["virtual"],
                   resonances=[tuple(p) for p in d["resonances"]], lam=d["lambda"],
                   search_region=tuple(d["search_region"]),
                   certified_count=d["certified_count"], uncovered=d.get("uncovered", []),
                   precise={int(i): tuple(v) for i, v in d.get("precise", {}).items()})


def _fdf(pot):
    def fdf(z):
        return jost_f(pot, z, with_derivative=True)
    return fdf


def _axis_roots(func, lo, hi, n=4000):
    xs = np.linspace(lo, hi, n + 1)[1:]
    vals = np.array([func(x) for x in xs])
    roots = []
    for a, b, fa, fb in zip(xs, xs[1:], vals, vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(optimize.brentq(func, a, b, xtol=1e-14, rtol=1e-14))
    return roots


def zero_resonance_flag(pot, threshold=1e-8, bits=212):
    with mpmath.workprec(bits):
        phi, dphi, _ = _propagate(pot, mpmath.mpc(0), 0, _Mp)
        f0 = dphi[0]
        scale = max(abs(phi[0]), abs(dphi[0]), 1)
        return int(abs(f0) < threshold * scale)


def refine_resonance(pot, guess, policy=PrecisionPolicy(), polish_bits=None):
    def F(z):
        return jost_f(pot, z)

    def dF(z):
        return jost_f(pot, z, with_derivative=True)[1]
    return refine_zero(F, dF, guess, policy, polish_bits=polish_bits)


def _newton_double(pot, z, iters=50):
    for _ in range(iters):
        f, df = jost_f(pot, z, with_derivative=True)
        if df == 0:
            break
        step = f / df
        z -= step
        if abs(step) < 1e-14 * max(1.0, abs(z)):
            break
    return z


def _search_rect(pot, rect, depth, max_depth, min_size):
    """Resonances inside rect as (zero, rect) pairs plus uncovered rectangles."""
    try:
        count = count_zeros_argument_principle(None, rect, fdf=_fdf(pot), vectorized=True).count
    except NumericFailure:
        return [], [rect]
    if count == 0:
        return [], []
    if count == 1 or rect.size < min_size:
        centre = complex(0.5 * (rect.re_min + rect.re_max), 0.5 * (rect.im_min + rect.im_max))
        z = _newton_double(pot, centre)
        if count == 1 and cmath.isfinite(z) and rect.grown(1e-9 * rect.size).contains(z):
            return [(z, rect)], []
        if depth >= max_depth:
            return [], [rect]
    out, uncovered = [], []
    for sub in rect.split():
        zs, un = _search_rect(pot, sub, depth + 1, max_depth, min_size)
        out += zs
        uncovered += un
    return out, uncovered


def find_spectral_data(pot, region=None, policy=PrecisionPolicy(), threads=1, max_depth=12,
                       refine_precise=False):
    """Bound states, virtual states and resonances of pot inside region.

    region = (re_min, re_max, im_min, im_max); it defaults to the stripe
    [0, 2 Ktilde] x [-||V||_1^(1/2), 0] with Ktilde = 6 ||V||_1, which is
    only practical for modest potentials.  Resonances closer than 1e-4 to
    the imaginary axis are left to the axis scans.  refine_precise runs the
    extended-precision Newton ladder on every resonance so that imaginary
    parts far below double resolution come out right.
    """
    pot.require_nontrivial()
    norm = pot.l1_norm
    if region is None:
        region = (0.0, 12.0 * norm, -math.sqrt(norm), 0.0)
    re_min, re_max, im_min, im_max = region
    vmin = min(pot.values)
    bound = []
    if vmin < 0:
        eta_max = math.sqrt(-vmin) * 1.01
        bound = _axis_roots(lambda e: jost_f(pot, 1j * e).real, 0.0, eta_max)
    kappa_max = max(-im_min, 1.0)
    virtual = _axis_roots(lambda kap: jost_f(pot, -1j * kap).real, 0.0, kappa_max)
    lam = zero_resonance_flag(pot)

    # F has no zeros off the imaginary axis in the upper half plane, so the
    # top edge is lifted off the real axis where near-real resonances sit
    lift = 0.02 * (im_max - im_min) if im_max >= 0 else 0.0
    left = max(re_min, 1e-4)
    root = Rect(left, re_max, im_min, im_max + lift)
    tiles = _tiles(root)
    min_size = 1e-3 * root.size
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(lambda r: _search_rect(pot, r, 0, max_depth, min_size), tiles))
    else:
        results = [_search_rect(pot, r, 0, max_depth, min_size) for r in tiles]
    zeros, uncovered = [], []
    for zs, un in results:
        zeros += [z for z, _ in zs]
        uncovered += un
    precise = {}
    refined = []
    for z in zeros:
        # double precision cannot resolve imaginary parts this small
        if refine_precise or abs(z.imag) < 1e-10 * abs(z):
            rz = refine_resonance(pot, z, policy, polish_bits=PRECISE_BITS)
            refined.append(rz.zero)
        else:
            refined.append(mpmath.mpc(z))
    order = sorted(range(len(refined)), key=lambda i: abs(complex(refined[i])))
    resonances = []
    for j, i in enumerate(order):
        z = refined[i]
        resonances.append((float(z.real), float(-z.imag)))
        precise[j] = (mpmath.nstr(z.real, PRECISE_DIGITS), mpmath.nstr(z.imag, PRECISE_DIGITS))
    return SpectralData(bound=bound, virtual=virtual, resonances=resonances, lam=lam,
                        search_region=(root.re_min, root.re_max, root.im_min, root.im_max),
                        certified_count=len(resonances),
                        uncovered=[(r.re_min, r.re_max, r.im_min, r.im_max) for r in uncovered],
                        precise=precise)


def _tiles(rect):
    """Split a long stripe into roughly square tiles."""
    width = rect.re_max - rect.re_min
    height = rect.im_max - rect.im_min
    n = max(1, int(math.ceil(width / max(height, 1e-12))))
    xs = np.linspace(rect.re_min, rect.re_max, n + 1)
    return [Rect(a, b, rect.im_min, rect.im_max) for a, b in zip(xs, xs[1:])]


# ---------------------------------------------------------------- bounds on zeros

def zero_count_log2_bound(pot, radius):
    """(1/log 2)[4 R_V radius + log(4 ||rV||_1 exp(4 ||rV||_1) + 1)], unrounded."""
    x = 4.0 * pot.r_l1_norm
    if x > 0:
        # log(x e^x + 1) = x + log(x) + log1p(e^{-x}/x), safe for huge x
        log_term = x + math.log(x) + math.log1p(math.exp(-x) / x) if x > 1e-300 else math.log1p(x)
    else:
        log_term = 0.0
    return (4.0 * pot.support_radius * radius + log_term) / math.log(2.0)


def zero_count_bound(pot, radius):
    """Upper bound on the number of Jost zeros with modulus below radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return int(math.ceil(zero_count_log2_bound(pot, radius)))


# ---------------------------------------------------------------- low-energy quantities

@dataclass
class ScatteringQuantities:
    scattering_length: float
    r0: float
    im_logderiv0: float


def scattering_quantities(pot, bits=212):
    """Scattering length a = -Im F'(0)/F(0) and r0 = (5/2)(R_V - Im F'(0)/F(0))."""
    pot.require_nontrivial()
    with mpmath.workprec(bits):
        f0, df0 = jost_f(pot, mpmath.mpc(0), with_derivative=True)
        if abs(f0) == 0:
            raise ZeroDivisionError("F(0) = 0: zero resonance")
        im_ld = float(mpmath.im(df0 / f0))
    if zero_resonance_flag(pot):
        raise ValueError("zero resonance present; the derivative formula does not apply")
    return ScatteringQuantities(-im_ld, 2.5 * (pot.support_radius - im_ld), im_ld)


def r0_partial_sums(spectral):
    """Running sums of 5 beta_n / |k_n|^2 over resonances in order of modulus."""
    out, acc = [], 0.0
    for a, b in spectral.resonances:
        acc += 5.0 * b / (a * a + b * b)
        out.append(acc)
    return out


# ---------------------------------------------------------------- Hadamard sums

@dataclass
class LogDerivComparison:
    direct: float
    hadamard: float
    tail_bound: float
    difference: float

    @property
    def consistent(self):
        return self.difference <= self.tail_bound


def logderiv_direct(pot, k, order, bits=PRECISE_BITS):
    """d^order/dk^order of Im F'/F at real k, in extended precision.

    Next to a narrow resonance F'/F is of size 1/beta and double precision
    loses every digit, hence mpmath throughout.
    """
    with mpmath.workprec(bits):
        jet = jost_jet(pot, mpmath.mpc(k), order + 1)
        dj = [(j + 1) * jet[j + 1] for j in range(order + 1)]
        g = _jdiv(dj, jet[: order + 1])
        return mpmath.im(g[order]) * math.factorial(order)


def logderiv_hadamard(pot, spectral, k, order, n_terms, bits=PRECISE_BITS):
    """Truncated Hadamard sum for the same quantity as logderiv_direct."""
    with mpmath.workprec(bits):
        k = mpmath.mpf(k)
        zs = spectral.zeros_mp()[:n_terms]
        if order == 0:
            total = mpmath.mpf(pot.support_radius)
            for z in zs:
                a, b = z.real, -z.imag
                total -= b / ((k - a) ** 2 + b * b) + b / ((k + a) ** 2 + b * b)
            total += sum(e / (k * k + e * e) for e in spectral.bound)
            total -= sum(c / (k * k + c * c) for c in spectral.virtual)
            return total
        q = order
        acc = mpmath.mpc(0)
        if spectral.lam and k != 0:
            acc += 1 / k ** (q + 1)
        for z in zs:
            acc += 1 / (k - z) ** (q + 1) + 1 / (k + mpmath.conj(z)) ** (q + 1)
        for e in spectral.bound:
            acc += 1 / (k - 1j * mpmath.mpf(e)) ** (q + 1)
        for c in spectral.virtual:
            acc += 1 / (k + 1j * mpmath.mpf(c)) ** (q + 1)
        return mpmath.im((-1) ** q * math.factorial(q) * acc)


def hadamard_tail_bound(pot, spectral, k, order, n_terms, r0=None):
    """Bound on the resonances left out of the truncated Hadamard sum at real k >= 0.

    order 0: the omitted terms are at most 4 * 2 * sum beta_n/|k_n|^2 once
    |k_n| >= 2k, and that sum is (r0 - partial r0)/5.
    order q >= 1: each omitted zero contributes at most 2^(q+2)/|k_n|^(q+1),
    and the sum over zeros beyond rho is bounded through the zero-count
    bound n(r) <= A r + B by (q+1)(A rho^-q / q + B rho^-(q+1) / (q+1)).
    Both sides of the sum run over mirror pairs, already counted by n(r).
    """
    zs = spectral.zeros()
    if n_terms > len(zs):
        raise ValueError("truncation exceeds the resonances found; enlarge the search region")
    # every zero of modulus below rho must be among the first n_terms
    rho = _region_radius(spectral)
    if n_terms < len(zs):
        rho = min(rho, abs(zs[n_terms]))
    if rho < 2 * abs(k):
        return math.inf
    if order == 0:
        if r0 is None:
            r0 = scattering_quantities(pot).r0
        partial = sum(5.0 * (-z.imag) / abs(z) ** 2 for z in zs[:n_terms])
        return 8.0 / 5.0 * max(r0 - partial, 0.0)
    q = order + 1
    A = 4.0 * pot.support_radius / math.log(2.0)
    B = zero_count_log2_bound(pot, 0.0) if pot.r_l1_norm > 0 else 0.0
    # Stieltjes integral of r^-q against n(r) from rho to infinity
    tail = q * (A * rho ** (1 - q) / (q - 1) + B * rho ** (-q) / q)
    return math.factorial(order) * 2.0 ** q * tail


def _region_radius(spectral):
    """Largest radius around 0 such that the search region covers the quarter disc."""
    re_min, re_max, im_min, im_max = spectral.search_region
    return min(re_max, -im_min)


def log_deriv_im(pot, spectral, k, order, n_terms, r0=None):
    """Direct and truncated-Hadamard values of the order-th derivative of Im F'/F.

    The difference is returned exactly (the two agree to many more digits
    than a double holds near a narrow resonance).
    """
    direct = logderiv_direct(pot, k, order)
    had = logderiv_hadamard(pot, spectral, k, order, n_terms)
    with mpmath.workprec(PRECISE_BITS):
        diff = float(abs(direct - had))
    return LogDerivComparison(float(direct), float(had),
                              hadamard_tail_bound(pot, spectral, float(k), order, n_terms, r0),
                              diff)


# ---------------------------------------------------------------- Gamow-type estimates

def gamow_rate_estimate(pot, energy, nuclear_radius):
    """(alpha/R_N) exp(-2 * integral of sqrt(V - E) over the forbidden band)."""
    action = sum(w * math.sqrt(v - energy) for w, v in pot.regions() if v > energy)
    if action == 0:
        raise ValueError("energy above the barrier: no classically forbidden band")
    alpha = math.sqrt(energy) if energy > 0 else 0.0
    return alpha / nuclear_radius * math.exp(-2.0 * action)


def table_resonance_1d(n, v0, a):
    """Large-V0 approximation of the n-th resonance of V0 on [-a, a] in one dimension."""
    x = (n + 1) ** 2 * math.pi ** 2 / (4 * a * a)
    return complex(math.sqrt(v0 + x), -(n + 1) ** 2 * math.pi ** 2
                   / (4 * a ** 3 * math.sqrt(v0 * v0 + v0 * x)))


def table_residual_1d(v0, a, k):
    q = cmath.sqrt(k * k - v0)
    return cmath.exp(4j * a * q) - ((k + q) / (k - q)) ** 2


def ball_resonance_residual(v0, a, k):
    """Residual of exp(2ia q) = (k + q)/(k - q), q = sqrt(k^2 - V0); any branch of q works."""
    if isinstance(k, (mpmath.mpf, mpmath.mpc)):
        q = mpmath.sqrt(k * k - v0)
        return mpmath.exp(2j * a * q) - (k + q) / (k - q)
    q = cmath.sqrt(k * k - v0)
    return cmath.exp(2j * a * q) - (k + q) / (k - q)
