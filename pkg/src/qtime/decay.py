"""Energy-time audit of a Gamow state with a Gaussian tail.

Units hbar = 1, mass 1/2, so E = k^2.  The initial state is the Gamow
function f(k0, r) cut at R, continued beyond R by f(k0, r) times a
Gaussian of width sigma (not normalised, so the state is continuous).

The error budget mixes numbers of wildly different size (c4 ~ 1e235 next
to beta ~ 1e-39), so it is evaluated in mpmath.  Results leave the
module as floats when they fit in a double and as LogMagnitude otherwise.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
from scipy import constants, optimize, special

from .bounds import ONE, BoundSet, _c_constants, _lm, _z_ac, bound_set
from .jost import find_spectral_data, jost_f, s_matrix
from .numerics import AccuracyWarning, LogMagnitude

log = logging.getLogger(__name__)

_PREC = 160     # bits for the budget arithmetic
SQRT_PI = math.sqrt(math.pi)


class PreconditionError(ValueError):
    """An inequality required by the long-time bound is not satisfied."""


def _mpf(x):
    if isinstance(x, LogMagnitude):
        if x.sign == 0:
            return mp.mpf(0)
        return x.sign * mp.power(10, mp.mpf(x.log10_mag))
    return mp.mpf(x)


def _out(x):
    """mpf -> float when it fits, LogMagnitude otherwise."""
    x = mp.mpf(x)
    if x == 0 or 1e-300 < abs(x) < 1e300:
        return float(x)
    return LogMagnitude.from_value(x)


def _log10(x):
    if isinstance(x, LogMagnitude):
        return x.log10_mag
    return math.log10(x) if x > 0 else -math.inf


# ---------------------------------------------------------------- model

@dataclass(frozen=True)
class DecayModel:
    """Resonance k0 = alpha - i beta of pot, cut radius R and tail width sigma.

    alpha and beta may be mpmath numbers; synthetic models (pot=None)
    exist for exercising the budget at scales no potential reaches.
    """
    pot: object
    alpha: object
    beta: object
    R: float
    sigma: object
    synthetic: bool = False
    residual: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("need alpha > 0 and beta > 0")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.pot is None and not self.synthetic:
            raise ValueError("a model without a potential must be marked synthetic")
        if self.pot is not None and self.R < self.pot.support_radius:
            raise ValueError(f"R={self.R} is inside the support radius {self.pot.support_radius}")

    @property
    def k0(self):
        return complex(float(self.alpha), -float(self.beta))

    @property
    def gamma(self):
        return 4 * self.alpha * self.beta

    @classmethod
    def from_potential(cls, pot, R=None, sigma=None, spectral=None, index=0,
                       region=(0.0, 12.0, -3.0, 0.0), tol=1e-10):
        """Model for the index-th resonance of pot; sigma defaults to beta."""
        if spectral is None:
            spectral = find_spectral_data(pot, region)
        if spectral.bound or spectral.virtual or spectral.lam:
            raise ValueError("the decay model needs no bound states, no virtual states"
                             " and no zero resonance")
        a, b = spectral.resonances[index]
        R = pot.support_radius if R is None else R
        sigma = b if sigma is None else sigma
        residual = certify_resonance(pot, complex(a, -b))
        if residual > tol:
            raise ValueError(f"k0 is not a zero of F: Newton step {residual:.3g} > {tol:.3g}")
        return cls(pot, a, b, R, sigma, residual=residual)

    @classmethod
    def synthetic_model(cls, alpha, beta, sigma=None, R=1.0):
        return cls(None, alpha, beta, R, beta if sigma is None else sigma, synthetic=True)


def certify_resonance(pot, k0, bits=448):
    """|F(k0)/F'(k0)| relative to |k0|: the size of the next Newton step."""
    with mp.workprec(bits):
        z = mp.mpc(k0.real, k0.imag)
        F, dF = jost_f(pot, z, with_derivative=True)
        return float(abs(F / dF) / abs(z))


# ---------------------------------------------------------------- closed forms

def _e_factor_mp(beta, sigma):
    x = mp.mpf(beta) * mp.mpf(sigma)
    return mp.sqrt(mp.pi) * mp.exp(x * x) * (1 + mp.erf(x))


def e_factor(beta, sigma):
    """sqrt(pi) exp(b^2 s^2) (1 + erf(b s)); LogMagnitude when it overflows."""
    if not (beta > 0 and sigma > 0):
        raise ValueError("beta and sigma must be positive")
    with mp.workprec(_PREC):
        return _out(_e_factor_mp(beta, sigma))


def _norms_mp(m):
    b, s = mp.mpf(m.beta), mp.mpf(m.sigma)
    grow = mp.exp(2 * b * m.R)
    E = _e_factor_mp(b, s)
    f = grow / (2 * b)
    g = s / 2 * grow * E
    return f, g, f * (1 + b * s * E)


def norms(model):
    """Squared norms of the cut Gamow state, the Gaussian tail and psi."""
    with mp.workprec(_PREC):
        f, g, p = _norms_mp(model)
        return {"f_R": _out(f), "g_R": _out(g), "psi": _out(p)}


def _var_energy_mp(m):
    a, b, s = mp.mpf(m.alpha), mp.mpf(m.beta), mp.mpf(m.sigma)
    E = _e_factor_mp(b, s)
    num = (2 * a ** 2 * b ** 2 * E ** 2
           + b ** 2 / (2 * s ** 2) * (1 + E ** 2)
           + b / (2 * s) * (b ** 2 + 4 * a ** 2 + mp.mpf(3) / (2 * s ** 2)) * E)
    return num / (1 + b * s * E) ** 2


def var_energy(model):
    with mp.workprec(_PREC):
        return _out(_var_energy_mp(model))


def time0_stats(model):
    """Mean and variance of the exponential law gamma exp(-gamma t)."""
    with mp.workprec(_PREC):
        g = 4 * mp.mpf(model.alpha) * mp.mpf(model.beta)
        return {"mean": _out(1 / g), "var": _out(1 / g ** 2)}


def gamow_state_error(alpha, beta, t):
    """Relative distance between e^{-iHt} f_R and the outgoing Gamow state."""
    if t < 0:
        raise ValueError("t must be non-negative")
    r = beta / alpha
    gt = 4 * alpha * beta * t
    ratio = (1 + 20 * math.sqrt(r)) / (1 + 10 * math.sqrt(r))
    inner = 3 * math.pi / 16 * math.sqrt(gt) * ratio ** 2 + 3 / 40
    return 4 / SQRT_PI * (math.sqrt(r) + r ** 0.25 * math.sqrt(inner))


# ---------------------------------------------------------------- long-time constants

@dataclass
class LongTimeConstants:
    M_K_inf: tuple      # sup bounds of psi-hat derivatives below K
    M_1: tuple          # weighted L1 bounds of psi-hat derivatives
    c3: object          # mpf
    c4: object
    K: float
    s: object

    def to_dict(self):
        def j(x):
            v = LogMagnitude.from_value(mp.mpf(x))
            return {"sign": v.sign, "log10": v.log10_mag if v.sign else None}
        return {"M_K_inf": [j(x) for x in self.M_K_inf], "M_1": [j(x) for x in self.M_1],
                "c3_tilde": j(self.c3), "c4_tilde": j(self.c4),
                "K": self.K, "s": j(self.s)}


def long_time_constants(model, C_K, C_global, s, z_K, z, K=None, s_K=1):
    """M_{K,inf}(n), M_1(n) and the two long-time coefficients.

    C_K, C_global: (C1, C2, C3) local and global S-matrix constants.
    z_K, z: the three z_ac sums (n = 0, 1, 2) for the local and global constants.
    """
    with mp.workprec(_PREC):
        a, b = mp.mpf(model.alpha), mp.mpf(model.beta)
        sg, R = mp.mpf(model.sigma), mp.mpf(model.R)
        K = a / 4 if K is None else mp.mpf(K)
        s = _mpf(s)
        if abs(K - a / 4) > 1e-9 * a:
            raise PreconditionError(f"K = alpha/4 fails: K={float(K):.6g}, alpha/4={float(a / 4):.6g}")
        if not s < K:
            raise PreconditionError(f"s < K fails: s={float(s):.6g}, K={float(K):.6g}")
        if not K <= 1:
            raise PreconditionError(f"K <= 1 fails: K={float(K):.6g}")
        if abs(_mpf(s_K) - 1) > 1e-12:
            raise PreconditionError(f"s_K = 1 fails: s_K={float(_mpf(s_K)):.6g}")
        C1K, C2K, _ = (_mpf(c) for c in C_K)
        C1, C2, _ = (_mpf(c) for c in C_global)
        zK = [_mpf(x) for x in z_K]
        zg = [_mpf(x) for x in z]

        eR = mp.exp(b * R)
        tail = sg / mp.sqrt(2) * _e_factor_mp(b, sg / mp.sqrt(2))
        Rb = R + b * sg ** 2
        M0 = eR * (2 / a + tail)
        M1 = eR * (4 / a ** 2 + (2 * R + C1K) / a + sg ** 2 + (Rb + C1K / 2) * tail)
        M2 = eR * (16 / a ** 3 + 4 * (2 * R + C1K) / a ** 2 + (R ** 2 + R * C1K + C2K / 2) * 2 / a
                   + sg ** 2 * (2 * R + C1K + b * sg ** 2)
                   + (C2K / 2 + C1K * Rb + sg ** 2 + Rb ** 2) * tail)

        lg = 2 * mp.log(2 / b) + mp.pi / 2
        ptail = mp.pi / 2 * tail          # pi sigma / 2^{3/2} E_{beta, sigma/sqrt2}
        W0 = eR * (lg + ptail)
        W1 = eR * (lg * (R + C1 / (2 * s)) + mp.pi / b + mp.pi * sg ** 2 / 2
                   + (Rb + C1 / (2 * s)) * ptail)
        W2 = eR * (lg * (R ** 2 + C1 / s * R + C2 / (2 * s ** 2))
                   + mp.pi / b * (2 * R + C1 / s) + 4 / b ** 2
                   + mp.pi * sg ** 2 / 2 * (2 * R + C1 / s + b * sg ** 2)
                   + (C2 / (2 * s ** 2) + C1 / s * Rb + sg ** 2 + Rb ** 2) * ptail)

        c3 = (27 * 2 ** 10 / a ** 5 * M0 ** 2 * zK[2] ** 2
              + 23 * mp.pi ** 2 * 2 ** 6 / a ** 3 * M1 ** 2 * zK[1] ** 2
              + 27 * 4 / a * M2 ** 2 * zK[0] ** 2)
        w = 1 + 16 / a ** 2
        c4 = (276 * W0 ** 2 / s ** 5 * w ** 4 * (zg[2] ** 2 + s ** 2 * zg[1] ** 2 + s ** 4 * zg[0] ** 2)
              + 304 * W1 ** 2 / s ** 3 * w ** 3 * (zg[1] ** 2 + s ** 2 * zg[0] ** 2)
              + 14 * W2 ** 2 / s * w ** 2 * zg[0] ** 2)
        return LongTimeConstants((M0, M1, M2), (W0, W1, W2), c3, c4, float(K), s)


def long_time_from_bound_set(model, bs: BoundSet):
    sc = bs.structural
    return long_time_constants(model, bs.C_K, bs.C_global, sc.s_lm,
                               [bs.z.ac_K_sum[n] for n in range(3)],
                               [bs.z.ac_sum[n] for n in range(3)], K=sc.K, s_K=sc.s_K_lm)


def synthetic_long_time(model, r0=1.0, R_V=1.0, q=1.0, nu=None):
    """Constants for an input that has the structure of a long-lived family.

    s_K = 1, s = beta / nu with nu = log(1/beta)^2 unless given, and O(1)
    values for r0, R_V and q.  No potential is behind these numbers.
    """
    with mp.workprec(_PREC):
        b = mp.mpf(model.beta)
        nu = mp.log(1 / b) ** 2 if nu is None else mp.mpf(nu)
        s = LogMagnitude.from_value(b / nu)
    a = float(model.alpha)
    CK = _c_constants(ONE, R_V, r0, a)
    C = _c_constants(s, R_V, r0, a, far=3 * R_V, q=q, global_form=True)
    zK = _z_ac(ONE, CK, model.R)[1]
    z = _z_ac(s, C, model.R)[1]
    return long_time_constants(model, CK, C, s, [zK[n] for n in range(3)],
                               [z[n] for n in range(3)], K=a / 4)


# ---------------------------------------------------------------- error budget

@dataclass
class ErrorBudget:
    A: object
    omega: object
    zeta: object
    epsilon_T: object
    omega_early: object
    omega_late: object
    zeta_early: object
    zeta_late: object
    model: DecayModel = field(repr=False)
    c3: object = field(repr=False)
    c4: object = field(repr=False)

    def xi_early(self, t):
        with mp.workprec(_PREC):
            return _xi_early(self.model, mp.mpf(t))

    def xi_late(self, t):
        with mp.workprec(_PREC):
            return _xi_late(self.model, self.c3, self.c4, mp.mpf(t))

    def xi(self, A=None):
        """xi_early(A) + xi_late(A): a time-uniform bound on the survival error."""
        A = self.A if A is None else A
        return self.xi_early(A) + self.xi_late(A)

    def to_dict(self):
        out = {}
        for k in ("A", "omega", "zeta", "epsilon_T", "omega_early", "omega_late",
                  "zeta_early", "zeta_late"):
            v = LogMagnitude.from_value(mp.mpf(getattr(self, k)))
            out[k] = {"sign": v.sign, "log10": v.log10_mag if v.sign else None}
        return out


def _early_coefficients(m):
    a, b, s = mp.mpf(m.alpha), mp.mpf(m.beta), mp.mpf(m.sigma)
    root = mp.sqrt(_e_factor_mp(b, s) * b * s)
    lead = 2 + root
    const = (mp.sqrt(6) * b ** mp.mpf(0.25) / (mp.sqrt(5 * mp.pi) * a ** mp.mpf(0.25))
             + 4 * mp.sqrt(b) / mp.sqrt(mp.pi * a) + root)
    return lead, mp.sqrt(54 * b), const


def _xi_early(m, t):
    lead, c54, const = _early_coefficients(m)
    return lead * (c54 * t ** mp.mpf(0.25) + const)


def _late_parts(m):
    b = mp.mpf(m.beta)
    return 2 * b * mp.exp(-2 * b * m.R), 4 * mp.mpf(m.alpha) * b


def _xi_late(m, c3, c4, t):
    damp, g = _late_parts(m)
    return damp * (c3 / t ** 3 + c4 / t ** 4) + mp.exp(-g * t)


def _omega_parts(m, c3, c4, A):
    lead, c54, const = _early_coefficients(m)
    damp, g = _late_parts(m)
    early = lead * (4 * c54 / 5 * A ** mp.mpf(1.25) + const * A)
    late = damp * (c3 / (2 * A ** 2) + c4 / (3 * A ** 3)) + mp.exp(-g * A) / g
    return early, late


def _zeta_parts(m, c3, c4, A):
    lead, c54, const = _early_coefficients(m)
    damp, g = _late_parts(m)
    early = lead * (4 * c54 / 9 * A ** mp.mpf(2.25) + const / 2 * A ** 2)
    late = damp * (c3 / A + c4 / (2 * A ** 2)) + mp.exp(-g * A) * (1 + g * A) / g ** 2
    return early, late


def _coefficients(bound_inputs, model):
    if isinstance(bound_inputs, BoundSet):
        bound_inputs = long_time_from_bound_set(model, bound_inputs)
    if isinstance(bound_inputs, LongTimeConstants):
        return bound_inputs.c3, bound_inputs.c4
    c3, c4 = bound_inputs
    return _mpf(c3), _mpf(c4)


def optimal_split(model, c3, c4):
    """Golden-section minimum of omega over log A, started at beta^{-18/17}."""
    with mp.workprec(_PREC):
        seed = float(-mp.mpf(18) / 17 * mp.log(mp.mpf(model.beta)))

        def f(x):
            e, l = _omega_parts(model, c3, c4, mp.exp(mp.mpf(x)))
            return float(mp.log(e + l))
        res = optimize.minimize_scalar(f, bracket=(seed - 2.0, seed + 2.0), method="golden",
                                       tol=1e-10)
        return mp.exp(mp.mpf(res.x))


def error_budget(model, bound_inputs, A=None):
    """omega, zeta and epsilon_T for the split time A (optimised when None).

    bound_inputs: a BoundSet, LongTimeConstants or a (c3~, c4~) pair; only
    the first two are checked against the preconditions.
    """
    c3, c4 = _coefficients(bound_inputs, model)
    with mp.workprec(_PREC):
        A = optimal_split(model, c3, c4) if A is None else mp.mpf(A)
        if not A > 0:
            raise ValueError("A must be positive")
        oe, ol = _omega_parts(model, c3, c4, A)
        ze, zl = _zeta_parts(model, c3, c4, A)
        g = 4 * mp.mpf(model.alpha) * mp.mpf(model.beta)
        omega, zeta = oe + ol, ze + zl
        eps = 2 * zeta + omega ** 2 + 2 * omega / g
        return ErrorBudget(A, omega, zeta, eps, oe, ol, ze, zl, model, c3, c4)


@dataclass
class Verdict:
    P0: object
    eps_P: object
    verdict: str

    @property
    def relative_error(self):
        return _out(mp.mpf(self.eps_P) / mp.mpf(self.P0))

    def to_dict(self):
        return {"P0": _jsonable(self.P0), "eps_P": _jsonable(self.eps_P), "verdict": self.verdict}


def _jsonable(x):
    v = LogMagnitude.from_value(mp.mpf(x))
    return {"sign": v.sign, "log10": v.log10_mag if v.sign else None}


def uncertainty_verdict(model, budget):
    """Compare Var E * Var_0 T with 1/4, allowing for the time-variance error."""
    with mp.workprec(_PREC):
        ve = _var_energy_mp(model)
        g = 4 * mp.mpf(model.alpha) * mp.mpf(model.beta)
        P0 = ve / g ** 2
        eps = ve * budget.epsilon_T
        quarter = mp.mpf(1) / 4
        if P0 - eps >= quarter:
            verdict = "holds"
        elif P0 + eps < quarter:
            verdict = "violated"
            msg = (f"uncertainty product below 1/4 with margin: P0={mp.nstr(P0, 8)},"
                   f" eps_P={mp.nstr(eps, 8)}; this should be impossible")
            log.error(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        else:
            verdict = "inconclusive"
        return Verdict(P0, eps, verdict)


# ---------------------------------------------------------------- momentum representation

def _tail_integral(q, sigma):
    """int_0^inf exp(i q u - u^2 / (2 sigma^2)) du for complex q."""
    return sigma * math.sqrt(math.pi / 2) * special.wofz(q * sigma / math.sqrt(2))


def psi_hat_parts(model, k=None, offset=None):
    """(f_R-hat, g_R-hat) at real k >= 0.

    Near the resonance pass offset = k - alpha instead of k: then k - k0 is
    formed exactly, which matters once beta is below the spacing of doubles
    around alpha.
    """
    if model.pot is None:
        raise ValueError("synthetic models have no momentum representation")
    a, b = float(model.alpha), float(model.beta)
    k0 = complex(a, -b)
    if offset is not None:
        offset = np.asarray(offset, dtype=float)
        k = a + offset
        dm = offset + 1j * b                  # k - k0
    else:
        k = np.asarray(k, dtype=float)
        dm = k - k0
    if np.any(k < 0):
        raise ValueError("psi_hat is defined for k >= 0")
    dp = k + k0
    Sb = np.conj(s_matrix(model.pot, k + 0j))     # = S(-k) on the real axis
    R, sg = model.R, float(model.sigma)
    em = np.exp(-1j * dm * R)                     # e^{i(k0 - k)R}
    ep = np.exp(1j * dp * R)
    f = -0.5 * (em / dm * Sb + ep / dp)
    g = (ep * _tail_integral(dp, sg) - Sb * em * _tail_integral(-dm, sg)) / 2j
    return f, g


def psi_hat(model, k=None, offset=None):
    """Generalised Fourier transform of psi against the outgoing eigenfunctions.

    With this normalisation int_0^inf |psi_hat|^2 dk = (pi/2) ||psi||^2.
    """
    f, g = psi_hat_parts(model, k, offset)
    return f + g


PLANCHEREL = 2.0 / math.pi


def energy_density(model, E):
    """Normalised energy density |psi_hat(sqrt E)|^2 / (2 sqrt E ||psi||^2)."""
    E = np.asarray(E, dtype=float)
    k = np.sqrt(E)
    n = float(norms(model)["psi"])
    return PLANCHEREL * np.abs(psi_hat(model, k)) ** 2 / (2 * k * n)


@dataclass
class Linewidth:
    gamma_num: float
    ratio: float             # gamma_num / gamma
    asymptotic: float        # gamma
    crossings: tuple         # half-maximum offsets in units of beta around alpha
    bracket: tuple | None    # (lower, upper) bounds on the linewidth
    delta: float
    m: float
    M: float
    peak: float

    @property
    def in_bracket(self):
        if self.bracket is None:
            return None
        lo, hi = self.bracket
        slack = 1e-12 * self.asymptotic
        return lo - slack <= self.gamma_num <= hi + slack


def _density_offsets(model, u):
    """beta^2 |psi_hat|^2 / k at k = alpha + beta u (a scaled energy density)."""
    b = float(model.beta)
    u = np.asarray(u, dtype=float)
    return b * b * np.abs(psi_hat(model, offset=b * u)) ** 2 / (float(model.alpha) + b * u)


def linewidth(model, window=60.0, n_grid=6001):
    """FWHM of the energy density together with its analytic bracket.

    The search covers k in alpha +- window*beta; the outermost pair of
    half-maximum crossings there is used.
    """
    a, b = float(model.alpha), float(model.beta)
    h = lambda u: float(_density_offsets(model, [u])[0])
    opt = optimize.minimize_scalar(lambda u: -h(u), bounds=(-3.0, 3.0), method="bounded",
                                   options={"xatol": 1e-12})
    u0, top = opt.x, -opt.fun
    grid = np.linspace(u0 - window, u0 + window, n_grid)
    vals = _density_offsets(model, grid) - top / 2
    if vals[0] > 0 or vals[-1] > 0:
        raise ValueError("density does not drop below half maximum inside the window")
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    lo_i, hi_i = idx[0], idx[-1]
    f = lambda u: h(u) - top / 2
    u_lo = optimize.brentq(f, grid[lo_i], grid[lo_i + 1], xtol=1e-14, rtol=1e-15)
    u_hi = optimize.brentq(f, grid[hi_i], grid[hi_i + 1], xtol=1e-14, rtol=1e-15)
    ratio = (u_hi - u_lo) / 2 * (1 + b * (u_hi + u_lo) / (2 * a))
    gamma = 4 * a * b
    delta, P, bracket = _linewidth_bracket(model)
    return Linewidth(ratio * gamma, ratio, gamma, (u_lo, u_hi), bracket, delta,
                     P - delta, P + delta, P)


def _linewidth_bracket(model):
    """delta, the unnormalised peak height and [E_L+ - E_L-, E_U+ - E_U-]."""
    with mp.workprec(_PREC):
        a, b = mp.mpf(model.alpha), mp.mpf(model.beta)
        sg, R = mp.mpf(model.sigma), mp.mpf(model.R)
        K = a / 4
        n2 = _norms_mp(model)[2]
        eR = mp.exp(b * R)
        tail = sg / mp.sqrt(2) * _e_factor_mp(b, sg / mp.sqrt(2))
        first = (mp.mpf(1) / 2 / (mp.sqrt(K) * mp.sqrt(a) * (mp.sqrt(K) + mp.sqrt(a)))
                 + 1 / (2 * mp.sqrt(K) * (K + a)) + tail / mp.sqrt(K))
        second = (1 / mp.sqrt(K) * (1 / b + tail) + 1 / (2 * mp.sqrt(a) * b))
        delta = eR / (2 * n2) * first * second
        P = mp.exp(2 * b * R) / (8 * a * b ** 2 * n2)
        m, M = P - delta, P + delta
        bracket = None
        if m / 2 - delta > 0:
            upper = 4 * a * b * mp.sqrt(P / (m / 2 - delta) - 1)
            lower = 4 * a * b * mp.sqrt(P / (M / 2 + delta) - 1)
            bracket = (float(lower), float(upper))
        return float(delta), float(P), bracket


# ---------------------------------------------------------------- lifetime

def lifetime_bracket(model, budget, A=None):
    """[(1 - 2e xi)/gamma, (1 + 2e xi)/gamma], or [0, inf) when xi >= 1/(2e)."""
    with mp.workprec(_PREC):
        xi = budget.xi(A)
        g = 4 * mp.mpf(model.alpha) * mp.mpf(model.beta)
        if xi >= 1 / (2 * mp.e):
            warnings.warn(f"xi = {mp.nstr(xi, 6)} >= 1/(2e); the lifetime bracket is [0, inf)",
                          AccuracyWarning, stacklevel=2)
            return {"tau_lo": 0.0, "tau_hi": math.inf, "xi": _out(xi), "degenerate": True}
        w = 2 * mp.e * xi
        return {"tau_lo": _out((1 - w) / g), "tau_hi": _out((1 + w) / g), "xi": _out(xi),
                "degenerate": False}


# ---------------------------------------------------------------- sweep

SWEEP_COLUMNS = ("beta", "gamma", "gamma_tau", "varE_var0T", "eps_P", "verdict")


@dataclass
class SweepReport:
    rows: list
    slope: float                 # d log(VarE Var0T) / d log beta
    gamma_tau_monotone: bool
    notes: list = field(default_factory=list)


def _sweep_row(pot, k0, R, region, certify):
    spectral = find_spectral_data(pot, region)
    zeros = [complex(a, -b) for a, b in spectral.resonances]
    idx = int(np.argmin([abs(z - k0) for z in zeros]))
    if idx != 0:
        raise ValueError("the sweep follows the lowest resonance of each potential")
    model = DecayModel.from_potential(pot, R=R, spectral=spectral, index=idx)
    bs = bound_set(pot, spectral, model.R, K=float(model.alpha) / 4, bound_mode=True,
                   certify=certify)
    budget = error_budget(model, bs)
    v = uncertainty_verdict(model, budget)
    lw = linewidth(model)
    return {"beta": float(model.beta), "gamma": float(model.gamma),
            "gamma_tau": lw.ratio, "varE_var0T": _out(v.P0), "eps_P": _out(v.eps_P),
            "verdict": v.verdict, "linewidth_bracket": lw.bracket,
            "lifetime": lifetime_bracket_quiet(model, budget)}


def lifetime_bracket_quiet(model, budget):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        return lifetime_bracket(model, budget)


def gamma_tau_sweep(family, R=None, region=(0.0, 30.0, -4.0, 0.0), certify=False,
                    threads=1, resolution=1e-12):
    """Rows for sigma = beta along family = [(pot, k0), ...] ordered by decreasing beta.

    tau is taken as 1/gamma, so gamma_tau is the numerical linewidth over gamma.
    """
    work = [(pot, k0, R, region, certify) for pot, k0 in family]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(lambda w: _sweep_row(*w), work))
    else:
        rows = [_sweep_row(*w) for w in work]
    betas = [r["beta"] for r in rows]
    notes = []
    if any(b2 >= b1 for b1, b2 in zip(betas, betas[1:])):
        notes.append("family is not ordered by decreasing beta")
    dev = [abs(r["gamma_tau"] - 1) for r in rows]
    # below `resolution` the deviation is rounding noise, not a trend
    monotone = all(d2 <= d1 + resolution for d1, d2 in zip(dev, dev[1:]))
    lp = [_ln(r["varE_var0T"]) for r in rows]
    slope = float(np.polyfit(np.log(betas), lp, 1)[0]) if len(rows) > 1 else math.nan
    for r in rows:
        if r["verdict"] == "violated":
            notes.append(f"VIOLATED verdict at beta={r['beta']:.4g}")
    return SweepReport(rows, slope, monotone, notes)


def _ln(x):
    if isinstance(x, LogMagnitude):
        return x.log10_mag * math.log(10)
    return math.log(x)


# ---------------------------------------------------------------- SI units

@dataclass(frozen=True)
class UnitSystem:
    length_unit_fm: float = 7.2
    particle_mass_MeV: float = 3727.4

    def __post_init__(self):
        if not (self.length_unit_fm > 0 and self.particle_mass_MeV > 0):
            raise ValueError("unit scales must be positive")

    @property
    def energy_MeV(self):
        hbar_c = constants.hbar * constants.c / (constants.mega * constants.eV * constants.femto)
        return hbar_c ** 2 / (2 * self.particle_mass_MeV * self.length_unit_fm ** 2)

    @property
    def time_s(self):
        hbar = constants.hbar / (constants.mega * constants.eV)      # MeV s
        return hbar / self.energy_MeV


def to_si(units, value, kind):
    """energy -> MeV, time -> s, rate -> 1/s, length -> m."""
    if kind == "energy":
        return value * units.energy_MeV
    if kind == "time":
        return value * units.time_s
    if kind == "rate":
        return value / units.time_s
    if kind == "length":
        return value * units.length_unit_fm * constants.femto
    raise ValueError(f"unknown kind {kind!r}; use energy, time, rate or length")
