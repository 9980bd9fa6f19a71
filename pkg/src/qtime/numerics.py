"""Numeric substrate: quadrature, complex erfc, zero counting and refinement,
and sign/log10 magnitudes for numbers far outside the double range."""

from __future__ import annotations

import math
import cmath
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate, special


class NumericFailure(RuntimeError):
    """Raised when a numerical routine cannot deliver its advertised accuracy."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class AccuracyWarning(UserWarning):
    pass


# ---------------------------------------------------------------- magnitudes

@dataclass(frozen=True)
class LogMagnitude:
    """A real number stored as sign and log10 of its modulus."""

    sign: int
    log10_mag: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or +1")
        if (self.sign == 0) != (self.log10_mag == -math.inf):
            raise ValueError("sign 0 must pair with log10_mag = -inf")

    @classmethod
    def zero(cls):
        return cls(0, -math.inf)

    @classmethod
    def from_value(cls, x):
        """Accepts float, int or mpmath numbers (which may exceed the double range)."""
        if isinstance(x, (mpmath.mpf, mpmath.mpc)):
            x = mpmath.re(x)
            if x == 0:
                return cls.zero()
            return cls(1 if x > 0 else -1, float(mpmath.log10(abs(x))))
        x = float(x)
        if x == 0.0:
            return cls.zero()
        if math.isnan(x):
            raise ValueError("NaN has no magnitude")
        return cls(1 if x > 0 else -1, math.log10(abs(x)))

    @classmethod
    def from_log(cls, log10_mag, sign=1):
        return cls(sign, float(log10_mag)) if sign else cls.zero()

    def __mul__(self, other):
        if not isinstance(other, LogMagnitude):
            other = LogMagnitude.from_value(other)
        if self.sign == 0 or other.sign == 0:
            return LogMagnitude.zero()
        return LogMagnitude(self.sign * other.sign, self.log10_mag + other.log10_mag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogMagnitude):
            other = LogMagnitude.from_value(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogMagnitude")
        if self.sign == 0:
            return LogMagnitude.zero()
        return LogMagnitude(self.sign * other.sign, self.log10_mag - other.log10_mag)

    def __rtruediv__(self, other):
        return LogMagnitude.from_value(other) / self

    def __pow__(self, n):
        if self.sign == 0:
            return LogMagnitude.zero() if n > 0 else LogMagnitude(1, 0.0)
        if self.sign < 0 and n != int(n):
            raise ValueError("non-integer power of a negative number")
        sign = self.sign ** int(n) if self.sign < 0 else 1
        return LogMagnitude(sign, self.log10_mag * n)

    def __add__(self, other):
        if not isinstance(other, LogMagnitude):
            other = LogMagnitude.from_value(other)
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        big, small = (self, other) if self.log10_mag >= other.log10_mag else (other, self)
        ratio = 10.0 ** (small.log10_mag - big.log10_mag)
        factor = 1.0 + ratio if big.sign == small.sign else 1.0 - ratio
        if factor == 0.0:
            return LogMagnitude.zero()
        return LogMagnitude(big.sign, big.log10_mag + math.log10(factor))

    __radd__ = __add__

    def __neg__(self):
        return LogMagnitude(-self.sign, self.log10_mag)

    def __sub__(self, other):
        if not isinstance(other, LogMagnitude):
            other = LogMagnitude.from_value(other)
        return self + (-other)

    def sqrt(self):
        if self.sign < 0:
            raise ValueError("square root of a negative number")
        return self ** 0.5

    def to_float(self):
        """Plain float; overflows to +-inf and underflows to 0 like IEEE arithmetic."""
        if self.sign == 0:
            return 0.0
        if self.log10_mag > 308.3:
            return self.sign * math.inf
        return self.sign * 10.0 ** self.log10_mag

    def mantissa_exponent(self):
        if self.sign == 0:
            return 0.0, 0
        e = math.floor(self.log10_mag)
        return self.sign * 10.0 ** (self.log10_mag - e), e

    def __str__(self):
        m, e = self.mantissa_exponent()
        return f"{m:.6g}e{e:+d}"


def log_product(factors):
    out = LogMagnitude(1, 0.0)
    for f in factors:
        out = out * f
    return out


# ---------------------------------------------------------------- precision

@dataclass(frozen=True)
class PrecisionPolicy:
    bits: int = 53
    escalation_factor: int = 2
    max_bits: int = 2048

    def __post_init__(self):
        if self.bits < 53 or self.escalation_factor < 2 or self.bits > self.max_bits:
            raise ValueError(f"invalid precision policy {self}")

    def ladder(self):
        b = self.bits
        while b <= self.max_bits:
            yield b
            b *= self.escalation_factor


# ---------------------------------------------------------------- quadrature

@dataclass
class QuadResult:
    value: complex | float
    error_estimate: float
    warning: str | None = None


def _quad_real(g, a, b, tol, limit, points):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, info, *rest = integrate.quad(
            g, a, b, epsabs=tol * 1e-2, epsrel=tol, limit=limit,
            points=points, full_output=1)
    return val, err, (rest[0] if rest else None)


def integrate_adaptive(f, a, b, tol=1e-10, limit=400, points=None, complex_valued=None):
    """Adaptive Gauss-Kronrod integration of a real- or complex-valued f.

    An infinite upper limit is mapped onto [0, 1) with x = a + t/(1-t).
    Raises NumericFailure when the error estimate stays above
    tol*max(1, |value|) by more than two orders of magnitude; smaller
    misses come back with a warning string attached.
    """
    if b == math.inf:
        def g(t, f=f):
            if t >= 1.0:
                return 0.0
            s = 1.0 - t
            return f(a + t / s) / (s * s)
        lo, hi = 0.0, 1.0
        if points is not None:
            points = [(p - a) / (1.0 + p - a) for p in points if p > a]
    else:
        g, lo, hi = f, a, b
    if complex_valued is None:
        probe = g(lo + 0.5 * (hi - lo) * 0.6180339887)
        complex_valued = np.iscomplexobj(probe) or isinstance(probe, complex)
    msgs = []
    if complex_valued:
        vr, er, mr = _quad_real(lambda x: complex(g(x)).real, lo, hi, tol, limit, points)
        vi, ei, mi = _quad_real(lambda x: complex(g(x)).imag, lo, hi, tol, limit, points)
        value, err = complex(vr, vi), math.hypot(er, ei)
        msgs = [m for m in (mr, mi) if m]
    else:
        value, err, m = _quad_real(lambda x: float(g(x)), lo, hi, tol, limit, points)
        msgs = [m] if m else []
    scale = tol * max(1.0, abs(value))
    if not math.isfinite(abs(value)) or err > 100 * scale:
        raise NumericFailure(
            f"quadrature did not converge on [{a}, {b}]: value={value}, error={err:.3g}",
            trace=msgs)
    warn = None
    if err > scale:
        warn = f"error estimate {err:.3g} above requested {scale:.3g}"
    return QuadResult(value, err, warn)


# ---------------------------------------------------------------- erfc

@dataclass(frozen=True)
class ScaledComplex:
    """Complex number stored as log10 of modulus and phase, for overflow cases."""

    log10_mag: float
    phase: float

    def to_complex(self):
        if self.log10_mag > 308.3:
            raise OverflowError("modulus exceeds the double range")
        return 10.0 ** self.log10_mag * cmath.exp(1j * self.phase)


def complex_erfc(z):
    """erfc of a complex argument through the scaled Faddeeva function.

    erfc(z) = exp(-z^2) * erfcx(z); when exp(-z^2) would overflow the
    result is returned as a ScaledComplex instead.
    """
    z = complex(z)
    if z.real >= 0:
        scaled = special.erfcx(z)
        log_factor = -(z * z)
        if log_factor.real > 700.0:
            return _scaled(log_factor, scaled)
        return cmath.exp(log_factor) * scaled
    # erfc(z) = 2 - erfc(-z), which is safe because erfc(-z) is the decaying branch
    other = complex_erfc(-z)
    if isinstance(other, ScaledComplex):
        return _scaled_two_minus(other)
    return 2.0 - other


def _scaled(log_factor, scaled):
    mag = log_factor.real / math.log(10) + math.log10(abs(scaled))
    return ScaledComplex(mag, log_factor.imag + cmath.phase(scaled))


def _scaled_two_minus(s):
    # 2 is negligible once the modulus is beyond 1e300
    return ScaledComplex(s.log10_mag, s.phase + math.pi)


def faddeeva(z):
    """w(z) = exp(-z^2) erfc(-iz), vectorised."""
    return special.wofz(z)


# ---------------------------------------------------------------- zero counting

@dataclass(frozen=True)
class Rect:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    @property
    def size(self):
        return max(self.re_max - self.re_min, self.im_max - self.im_min)

    def corners(self):
        return [complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max)]

    def contains(self, z):
        return (self.re_min <= z.real <= self.re_max) and (self.im_min <= z.imag <= self.im_max)

    def grown(self, d):
        return Rect(self.re_min - d, self.re_max + d, self.im_min - d, self.im_max + d)

    def split(self):
        """Quarter the rectangle."""
        xm = 0.5 * (self.re_min + self.re_max)
        ym = 0.5 * (self.im_min + self.im_max)
        return [Rect(self.re_min, xm, self.im_min, ym), Rect(xm, self.re_max, self.im_min, ym),
                Rect(xm, self.re_max, ym, self.im_max), Rect(self.re_min, xm, ym, self.im_max)]


@dataclass
class ZeroCount:
    count: int
    winding: complex
    rect: Rect
    perturbation: float = 0.0
    notes: list = field(default_factory=list)

    def __int__(self):
        return self.count

    def __index__(self):
        return self.count

    def __eq__(self, other):
        if isinstance(other, ZeroCount):
            return self.count == other.count
        return self.count == other

    def __hash__(self):
        return hash(self.count)


def _numeric_derivative(F, z, h):
    return (F(z + h) - F(z - h) - 1j * (F(z + 1j * h) - F(z - 1j * h))) / (4 * h)


def _logderiv_factory(F, dF, fdf, h):
    if fdf is not None:
        def ld(z):
            fz, dz = fdf(z)
            return complex(dz / fz), fz
    elif dF is None:
        def ld(z):
            fz = F(z)
            d = _numeric_derivative(F, z, h)
            # near a zero the stencil must be smaller than the distance to it
            dist = abs(fz / d) if d != 0 else math.inf
            if dist < 100 * h:
                d = _numeric_derivative(F, z, max(0.01 * dist, 1e-300))
            return complex(d / fz), fz
    else:
        def ld(z):
            fz = F(z)
            return complex(dF(z) / fz), fz
    return ld


def _newton_from(ld, w, spacing):
    prev_step = None
    for _ in range(40):
        try:
            q, _ = ld(w)
        except ZeroDivisionError:
            return w
        if not cmath.isfinite(q):
            return w
        if q == 0:
            return None
        dw = 1.0 / q
        if prev_step is None and abs(dw) > 2.0 * spacing:
            return None
        # quadratic convergence or give up; this rejects exponential-type F
        if prev_step is not None and abs(dw) > 0.5 * abs(prev_step):
            return None
        w = w - dw
        prev_step = dw
        if abs(dw) < 1e-13 * max(1.0, abs(w)):
            return w
    return None


def _nearby_zeros(ld, a, b, L, n_samples, ld_vec=None):
    """Newton-located zeros of F close to the segment [a, b]."""
    found = []
    length = abs(b - a)
    direction = (b - a) / length
    spacing = length / (n_samples - 1)
    zs = a + np.linspace(0.0, 1.0, n_samples) * (b - a)
    if ld_vec is not None:
        with np.errstate(all="ignore"):
            q = ld_vec(zs)
            steps = np.abs(1.0 / q)
        starts = [z for z, st, qq in zip(zs, steps, q)
                  if not np.isfinite(qq) or st <= 2.0 * spacing]
    else:
        starts = zs
    for z in starts:
        w = _newton_from(ld, complex(z), spacing)
        if w is None:
            continue
        t = (w - a) / direction
        if -0.05 * L <= t.real <= length + 0.05 * L and abs(t.imag) < 0.05 * L:
            if all(abs(w - u) > 1e-9 * L for u, _ in found):
                found.append((w, t))
    return found


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _panel_integral(g, panels):
    """Composite 20-point Gauss-Legendre of a vectorised g over [0, 1]."""
    edges = np.linspace(0.0, 1.0, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 / panels
    x = (mid[:, None] + half * _GL_NODES[None, :]).ravel()
    vals = g(x).reshape(panels, -1)
    return complex(half * np.sum(vals * _GL_WEIGHTS[None, :]))


def _vector_edge_integral(g, tol=1e-10, max_panels=4096):
    panels = 2
    prev = _panel_integral(g, panels)
    while panels < max_panels:
        panels *= 2
        cur = _panel_integral(g, panels)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise NumericFailure(f"edge integral not converged with {max_panels} panels")


def count_zeros_argument_principle(F, rect, tol=0.1, dF=None, fdf=None, n_samples=129,
                                   max_retries=4, vectorized=False):
    """Number of zeros of an analytic F inside rect, with multiplicity.

    The winding number, the contour integral of F'/F over 2 pi i, is
    integrated edge by edge.  Zeros lying close to an edge are located by
    Newton from a sampling pass and their simple poles are subtracted from
    the integrand and added back in closed form, so sharp peaks cannot slip
    between quadrature nodes.  A zero within 1e-8*size of the boundary
    makes the rectangle grow by 1e-6*size (then shrink, alternately)
    before retrying; the perturbation is reported on the result.

    fdf, if given, returns (F(z), F'(z)) in one call.  With vectorized=True
    the callables must also accept numpy arrays; the sampling pass and a
    composite Gauss-Legendre rule then run on whole arrays at once.
    """
    if tol >= 0.5:
        raise ValueError("tol must be below 0.5")
    rect0 = rect
    L = rect.size
    ld = _logderiv_factory(F, dF, fdf, 1e-5 * L)
    ld_vec = None
    if vectorized:
        def ld_vec(z):
            q, _ = ld_array(z)
            return q

        def ld_array(z):
            if fdf is not None:
                fz, dz = fdf(z)
            else:
                fz, dz = F(z), dF(z)
            return dz / fz, fz
    notes = []
    shift = 0.0
    for attempt in range(max_retries):
        corners = rect.corners()
        edges = list(zip(corners, corners[1:] + corners[:1]))
        near = [_nearby_zeros(ld, a, b, L, n_samples, ld_vec) for a, b in edges]
        on_edge = [w for (a, b), zs in zip(edges, near) for w, t in zs
                   if abs(t.imag) < 1e-8 * L and -1e-8 * L <= t.real <= abs(b - a) + 1e-8 * L]
        if not on_edge:
            total = 0j
            failed = False
            for (a, b), zs in zip(edges, near):
                d = b - a
                poles = [w for w, _ in zs]
                try:
                    if vectorized:
                        def g(s, a=a, d=d, poles=poles):
                            z = a + s * d
                            with np.errstate(all="ignore"):
                                q = ld_vec(z)
                            for w in poles:
                                q = q - 1.0 / (z - w)
                            return q * d
                        value = _vector_edge_integral(g)
                    else:
                        def integrand(s, a=a, d=d, poles=poles):
                            z = a + s * d
                            q, _ = ld(z)
                            return (q - sum(1.0 / (z - w) for w in poles)) * d
                        value = integrate_adaptive(integrand, 0.0, 1.0, tol=1e-9, limit=2000,
                                                   complex_valued=True).value
                except NumericFailure as exc:
                    notes.append(str(exc))
                    failed = True
                    break
                # a straight segment subtends less than pi, so the principal log is exact
                total += value + sum(cmath.log((b - w) / (a - w)) for w in poles)
            winding = total / (2j * math.pi)
            n = round(winding.real) if cmath.isfinite(winding) else 0
            if not failed and cmath.isfinite(winding) and abs(winding - n) <= tol:
                return ZeroCount(int(n), winding, rect, perturbation=shift, notes=notes)
            notes.append(f"winding {winding:.6g} not integral")
        else:
            notes.append(f"zero near boundary at {on_edge[0]:.6g}")
        shift = 1e-6 * L * (attempt // 2 + 1) * (1 if attempt % 2 == 0 else -1)
        notes.append(f"perturbing rectangle by {shift:.3g}")
        rect = rect0.grown(shift)
    raise NumericFailure("argument-principle count did not settle", trace=notes)


# ---------------------------------------------------------------- zero refinement

@dataclass
class RefinedZero:
    zero: complex | mpmath.mpc
    residual: float
    bits: int
    trace: list

    @property
    def value(self):
        return complex(self.zero)


def _agree(a, b, scale, floor):
    if abs(a - b) <= 1e-4 * max(abs(a), abs(b)):
        return True
    return max(abs(a), abs(b)) <= floor * scale


def _newton(F, dF, z, bits, max_iter=80):
    eps = mpmath.mpf(2) ** (-bits + 8)
    h = mpmath.mpf(2) ** (-bits // 2)
    step = None
    for _ in range(max_iter):
        fz = F(z)
        if fz == 0:
            return z, 0
        d = dF(z) if dF is not None else (F(z + h) - F(z - h)) / (2 * h)
        if d == 0:
            raise NumericFailure(f"vanishing derivative at {z}")
        step = fz / d
        z = z - step
        if abs(step) <= eps * max(1, abs(z)):
            break
    return z, abs(step) if step is not None else 0


def refine_zero(F, dF=None, z0=0j, policy=PrecisionPolicy(), basin=None, polish_bits=None):
    """Newton iteration at escalating mpmath precision.

    Stops once two successive precisions agree to relative 1e-4 in the
    real part and, separately, in the imaginary part.  F and dF must
    accept mpmath.mpc arguments.  basin bounds the allowed drift from z0.
    polish_bits adds a last Newton pass at that precision, for callers
    that evaluate functions with poles right next to the zero.
    """
    trace = []
    z = mpmath.mpc(z0)
    prev = None
    bits_list = list(policy.ladder())
    for i, bits in enumerate(bits_list):
        with mpmath.workprec(bits):
            z = mpmath.mpc(z)
            z, last_step = _newton(F, dF, z, bits)
            residual = abs(F(z))
        trace.append((bits, complex(z), float(residual)))
        if basin is not None and abs(complex(z) - complex(z0)) > basin:
            raise NumericFailure(f"Newton left the basin around {z0}", trace)
        if not (mpmath.isfinite(z.real) and mpmath.isfinite(z.imag)):
            raise NumericFailure("Newton diverged", trace)
        if prev is not None:
            # a component that is exactly zero never agrees relatively; it is
            # accepted as zero only at the top of the ladder
            floor = mpmath.mpf(2) ** (-(bits_list[i - 1] - 16)) if i == len(bits_list) - 1 else 0
            scale = abs(z)
            if _agree(z.real, prev.real, scale, floor) and _agree(z.imag, prev.imag, scale, floor):
                if polish_bits and polish_bits > bits:
                    with mpmath.workprec(polish_bits):
                        z, _ = _newton(F, dF, mpmath.mpc(z), polish_bits)
                        residual = abs(F(z))
                    bits = polish_bits
                return RefinedZero(z, float(residual), bits, trace)
        prev = z
    raise NumericFailure(f"zero near {z0} did not stabilise below {policy.max_bits} bits", trace)
