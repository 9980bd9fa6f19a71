"""Explicit constants for dispersive decay bounds of step potentials.

Everything that can leave the double range (1/s can be ~1e44 and c4
~1e232 for a long-lived resonance) is carried as LogMagnitude.  The
formulas are evaluated literally; nothing is simplified behind the
reader's back except where a helper says so.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .jost import jost_f, s_matrix_derivatives, scattering_quantities, zero_count_bound
from .numerics import LogMagnitude, NumericFailure, Rect, count_zeros_argument_principle

L = LogMagnitude.from_value
ONE = LogMagnitude(1, 0.0)
PI = math.pi


def _lm(x):
    return x if isinstance(x, LogMagnitude) else L(x)


def _f(x):
    return _lm(x).to_float()


def _lm_json(x):
    x = _lm(x)
    return {"sign": x.sign, "log10": x.log10_mag if x.sign else None}


# ---------------------------------------------------------------- structural constants

@dataclass
class StructuralConstants:
    K: float
    nu_K: int
    inv_s_K: LogMagnitude
    K_tilde: float
    nu_K_tilde: int
    nu_K_tilde_is_bound: bool    # True: nu_K_tilde is a certified upper bound
    inv_s: LogMagnitude          # upper bound on 1/s when nu_K_tilde_is_bound
    inv_eta: float
    inv_kappa: float
    q: float
    alpha: float
    r0: float
    R_V: float
    beta0: float
    beta0_is_min: bool
    exclusion: object = None     # ZeroCount over the excluded block, bound mode only
    notes: list = field(default_factory=list)

    @property
    def s_K(self):
        return (ONE / self.inv_s_K).to_float()

    @property
    def s(self):
        return (ONE / self.inv_s).to_float()

    @property
    def s_lm(self):
        return ONE / self.inv_s

    @property
    def s_K_lm(self):
        return ONE / self.inv_s_K

    def to_dict(self):
        return {
            "K": self.K, "nu_K": self.nu_K, "s_K": _lm_json(self.s_K_lm),
            "K_tilde": self.K_tilde, "nu_K_tilde": self.nu_K_tilde,
            "nu_K_tilde_is_bound": self.nu_K_tilde_is_bound,
            "s": _lm_json(self.s_lm), "inv_s": _lm_json(self.inv_s),
            "inv_eta": self.inv_eta, "inv_kappa": self.inv_kappa, "q": self.q,
            "alpha": self.alpha, "r0": self.r0, "R_V": self.R_V, "beta0": self.beta0,
            "beta0_is_min": self.beta0_is_min,
            "exclusion_count": None if self.exclusion is None else int(self.exclusion),
            "exclusion_rect": None if self.exclusion is None else list(
                (self.exclusion.rect.re_min, self.exclusion.rect.re_max,
                 self.exclusion.rect.im_min, self.exclusion.rect.im_max)),
            "notes": list(self.notes),
        }


def _nu(resonances, K):
    """Smallest nu with alpha_n >= 2K for every n >= nu (zeros ordered by modulus)."""
    nu = 0
    for n, (a, _) in enumerate(resonances):
        if a < 2 * K:
            nu = n + 1
    return nu


def _inv_s(spectral, nu):
    """1/eta + 1/kappa + sum_{n<nu} 1/beta_n, or 1 when that is zero."""
    total = L(sum(1.0 / e for e in spectral.bound) + sum(1.0 / k for k in spectral.virtual))
    for _, b in spectral.resonances[:nu]:
        total = total + ONE / L(b)
    return ONE if total.sign == 0 else total


def certify_exclusion(pot, K_tilde, depth=2.0, bits=106):
    """Argument-principle count on [0, 2K~] x [-2K~(1+depth), -2K~].

    The part of the stripe Re k <= 2K~ outside the disc of radius
    2^{3/2} K~ lies below Im k = -2K~.  |F| there exceeds double range,
    so F is evaluated in mpmath.  Deeper down F'/F tends to 2 i R_V and
    cannot wind; the certified block is where that is not yet obvious.
    """
    top = 2.0 * K_tilde

    def fdf(z):
        with mpmath.workprec(bits):
            return jost_f(pot, mpmath.mpc(z), with_derivative=True)

    rect = Rect(0.0, top, -top * (1.0 + depth), -top)
    return count_zeros_argument_principle(None, rect, fdf=fdf)


def structural(spectral, pot, K=None, bound_mode=False, r0=None, certify=True):
    """Spectral constants s_K, s, nu_K, q, alpha and r0 for pot.

    K defaults to alpha_0/4.  Without bound_mode the enumerated zeros must
    reach Re k = 2 max(K, K~).  In bound mode nu_K~ is replaced by the
    zero-count bound for the disc of radius 2^{3/2} K~ once the argument
    principle shows no zeros in the block beneath it, and 1/s is bounded by
    1/eta + 1/kappa + nu_K~ / beta_min.
    """
    pot.require_nontrivial()
    res = list(spectral.resonances)
    if not res:
        raise ValueError("no resonances enumerated; alpha = min alpha_n is undefined")
    alpha = min(a for a, _ in res)
    beta0 = res[0][1]
    beta_min = min(b for _, b in res)
    notes = []
    beta0_is_min = beta0 <= beta_min
    if not beta0_is_min:
        notes.append(f"beta_0={beta0:.6g} exceeds min beta_n={beta_min:.6g} on the enumerated prefix")
    if K is None:
        K = res[0][0] / 4.0
    if K <= 0:
        raise ValueError("K must be positive")
    norm = pot.l1_norm
    K_tilde = 6.0 * norm
    R_V = pot.support_radius
    q = 1.0 / (2.0 * norm) + 6.0 * R_V
    inv_eta = sum(1.0 / e for e in spectral.bound)
    inv_kappa = sum(1.0 / k for k in spectral.virtual)
    re_max = spectral.search_region[1]

    if 2 * K > re_max:
        raise ValueError(f"enumerated zeros reach Re k = {re_max:.6g} < 2K = {2 * K:.6g}")
    nu_K = _nu(res, K)
    inv_s_K = _inv_s(spectral, nu_K)

    exclusion = None
    if bound_mode:
        if certify:
            exclusion = certify_exclusion(pot, K_tilde)
            if int(exclusion) != 0:
                raise NumericFailure(f"{int(exclusion)} zeros below the disc; bound mode invalid")
        else:
            notes.append("exclusion block not certified")
        nu_Kt = zero_count_bound(pot, 2 ** 1.5 * K_tilde)
        inv_s = L(inv_eta + inv_kappa) + L(nu_Kt) / L(beta_min)
    else:
        if 2 * K_tilde > re_max:
            raise ValueError(f"enumerated zeros reach Re k = {re_max:.6g} < 2K~ = {2 * K_tilde:.6g};"
                             " use bound_mode")
        nu_Kt = _nu(res, K_tilde)
        inv_s = _inv_s(spectral, nu_Kt)
    if spectral.uncovered:
        notes.append(f"{len(spectral.uncovered)} rectangles of the search region left uncovered")

    if r0 is None:
        sq = scattering_quantities(pot)
        r0 = 2.5 * (sq.scattering_length + R_V + inv_eta - inv_kappa)
    return StructuralConstants(K=K, nu_K=nu_K, inv_s_K=inv_s_K, K_tilde=K_tilde, nu_K_tilde=nu_Kt,
                               nu_K_tilde_is_bound=bound_mode, inv_s=inv_s, inv_eta=inv_eta,
                               inv_kappa=inv_kappa, q=q, alpha=alpha, r0=r0, R_V=R_V,
                               beta0=beta0, beta0_is_min=beta0_is_min, exclusion=exclusion,
                               notes=notes)


# ---------------------------------------------------------------- S-matrix constants

def _c_constants(s, R_V, r0, alpha, far=0.0, q=0.0, global_form=False):
    s = _lm(s)
    a1 = R_V + r0            # appears in C_1 and the middle term of C_3 unchanged
    a3 = far + r0            # 3R_V + r0 in the global form
    lin = a3 if global_form else a1
    C1 = 2 * (ONE + s * lin)
    extra2 = R_V * q if global_form else 0.0
    C2 = 4 * (L(3.0) + 2 * s ** 2 * L(r0 / alpha + lin ** 2 + extra2))
    extra3 = 18 * R_V * q ** 2 if global_form else 0.0
    C3 = 4 * (L(15.0) + 6 * s * a1 + 12 * s ** 2 * (r0 / alpha)
              + s ** 3 * L(7 * r0 / alpha + 12 * r0 / alpha * a1 + 8 * lin ** 3 + extra3))
    return C1, C2, C3


def c_constants_K(sc, R_V=None):
    """(C_{1,K}, C_{2,K}, C_{3,K}) bounding |S^(n)| s_K^n on [0, K)."""
    R_V = sc.R_V if R_V is None else R_V
    return _c_constants(sc.s_K_lm, R_V, sc.r0, sc.alpha)


def c_constants_global(sc, R_V=None):
    """(C_1, C_2, C_3) bounding |S^(n)| s^n on [0, inf)."""
    R_V = sc.R_V if R_V is None else R_V
    return _c_constants(sc.s_lm, R_V, sc.r0, sc.alpha, far=3 * R_V, q=sc.q, global_form=True)


# ---------------------------------------------------------------- z tables

def _z_ac(s, C, R):
    s, R = _lm(s), _lm(R)
    C1, C2, C3 = C
    Rs = R * s
    t = {
        (0, 0): (2 * Rs + C1) / 2,
        (0, 1): ONE,
        (1, 0): (2 * Rs ** 2 + 2 * Rs * C1 + C2) / 4,
        (1, 1): (2 * Rs + C1) / 2,
        (1, 2): ONE,
        (2, 0): (2 * Rs ** 3 + 3 * Rs ** 2 * C1 + 3 * Rs * C2 + C3) / 6,
        (2, 1): (2 * Rs ** 2 + 2 * Rs * C1 + C2) / 2,
        (2, 2): 2 * Rs + C1,
        (2, 3): L(2.0),
    }
    sums = {n: sum((t[(n, m)] for m in range(n + 2)), LogMagnitude.zero()) for n in range(3)}
    return t, sums


def _z_e(s, C, R, eta0):
    s, R = _lm(s), _lm(R)
    C1, C2, _ = C
    r2 = math.sqrt(2.0)
    z0 = L(r2)
    if eta0 is None:
        return {0: z0, 1: None, 2: None}
    eta = L(eta0)
    z1 = (2 * s + (2 * R * s + C1) * eta) / r2
    z2 = (C2 * eta ** 2 + 2 * eta * s * (C1 + R * s) * (R * eta + 1) + 4 * s ** 2) / r2
    return {0: z0, 1: z1, 2: z2}


@dataclass
class ZTables:
    ac_K: dict
    ac_K_sum: dict
    ac: dict
    ac_sum: dict
    e_K: dict
    e: dict

    def to_dict(self):
        def tab(d):
            return {f"{n},{m}": _lm_json(v) for (n, m), v in d.items()}

        def vec(d):
            return {str(n): None if v is None else _lm_json(v) for n, v in d.items()}
        return {"z_ac_K": tab(self.ac_K), "z_ac_K_sum": vec(self.ac_K_sum),
                "z_ac": tab(self.ac), "z_ac_sum": vec(self.ac_sum),
                "z_e_K": vec(self.e_K), "z_e": vec(self.e)}


def z_tables(sc, C_K, C_global, R, eta0=None):
    if R < sc.R_V:
        raise ValueError("R must be at least R_V")
    acK, acK_sum = _z_ac(sc.s_K_lm, C_K, R)
    ac, ac_sum = _z_ac(sc.s_lm, C_global, R)
    return ZTables(acK, acK_sum, ac, ac_sum, _z_e(sc.s_K_lm, C_K, R, eta0),
                   _z_e(sc.s_lm, C_global, R, eta0))


# ---------------------------------------------------------------- Gamow state norms

@dataclass
class NormBounds:
    """Bounds on sup_[0,K] |psi^(n)| (sup) and int |psi^(n)| w (weighted)."""
    sup: tuple
    weighted: tuple
    psi0: LogMagnitude

    def to_dict(self):
        return {"sup": [_lm_json(x) for x in self.sup],
                "weighted": [_lm_json(x) for x in self.weighted], "psi0": _lm_json(self.psi0)}


def gamow_norm_bounds(k0, R, K, C_K, C_global, s, s_K, lam=0):
    """Norm bounds for the Fourier-type transform of the Gamow state cut at R."""
    alpha, beta = k0.real, -k0.imag
    if not 0 <= K < alpha / 2:
        raise ValueError("need 0 <= K < alpha/2")
    if beta <= 0:
        raise ValueError("k0 must lie in the lower half plane")
    s, s_K = _lm(s), _lm(s_K)
    C1K, C2K, _ = C_K
    C1, C2, _ = C_global
    grow = LogMagnitude(1, beta * R / math.log(10))       # e^{beta R}
    a, R_ = L(alpha), L(R)
    two_over_a = L(2.0) / a
    n0 = grow * two_over_a
    lin_K = 2 * R_ + C1K / s_K
    n1 = grow * (L(4.0) / a ** 2 + lin_K / a)
    n2 = grow * (L(16.0) / a ** 3 + lin_K * L(4.0) / a ** 2
                 + (R_ ** 2 + R_ * C1K / s_K + C2K / (2 * s_K ** 2)) * two_over_a)
    b = L(beta)
    lg = L(2 * (math.log(2.0) - math.log(beta)) + PI / 2)
    w0 = grow * lg
    w1 = grow * (lg * (R_ + C1 / (2 * s)) + L(PI) / b)
    w2 = grow * (lg * (R_ ** 2 + C1 / s * R_ + C2 / (2 * s ** 2))
                 + L(PI) / b * (2 * R_ + C1 / s) + L(4.0) / b ** 2)
    psi0 = grow / L(abs(k0)) if lam else n0
    return NormBounds((n0, n1, n2), (w0, w1, w2), psi0)


def gamow_norm_squared(k0, R):
    """||f_R||^2 = e^{2 beta R} / (2 beta)."""
    beta = -k0.imag
    return LogMagnitude(1, 2 * beta * R / math.log(10)) / L(2 * beta)


# ---------------------------------------------------------------- dispersive constants

@dataclass
class DispersiveConstants:
    simplified: tuple | None     # None when s, s_K or K exceeds 1
    pure: tuple
    e: tuple

    @property
    def best(self):
        return self.simplified if self.simplified is not None else self.pure


def _c_ac_simplified(nb, sK, s, zK, z, K):
    p0, p1, p2 = (x ** 2 for x in nb.sup)
    w0, w1, w2 = (x ** 2 for x in nb.weighted)
    psi0 = nb.psi0 ** 2
    Kl = L(K)
    pi2 = PI ** 2
    c1 = 81 * pi2 / Kl * psi0 / sK ** 2 * zK[0] ** 2
    c2 = 53 * pi2 / Kl ** 3 * psi0 / sK ** 4 * zK[1] ** 2 + 53 * pi2 / Kl * p1 / sK ** 2 * zK[0] ** 2
    c3 = (27 / Kl ** 5 * p0 / sK ** 6 * zK[2] ** 2 + 23 * pi2 / Kl ** 3 * p1 / sK ** 4 * zK[1] ** 2
          + 27 / Kl * p2 / sK ** 2 * zK[0] ** 2)
    g = ONE + ONE / Kl ** 2
    c4 = (276 * w0 / s ** 5 * g ** 4 * (z[2] ** 2 + s ** 2 * z[1] ** 2 + s ** 4 * z[0] ** 2)
          + 304 * w1 / s ** 3 * g ** 3 * (z[1] ** 2 + s ** 2 * z[0] ** 2)
          + 14 * w2 / s * g ** 2 * z[0] ** 2)
    return c1, c2, c3, c4


def _c_ac_pure(nb, sK, s, tK, t, K):
    p0, p1, p2 = (x ** 2 for x in nb.sup)
    w0, w1, w2 = (x ** 2 for x in nb.weighted)
    psi0 = nb.psi0 ** 2
    Kl = L(K)
    pi2 = PI ** 2

    def q(n, m):
        return tK[(n, m)] ** 2

    def g(n, m):
        return t[(n, m)] ** 2
    c1 = 81 * pi2 * psi0 / sK ** 2 * (Kl * q(0, 0) + sK ** 2 / (2 * Kl) * q(0, 1))
    head1 = Kl * q(1, 0) + sK ** 2 / Kl * q(1, 1) + sK ** 4 / (6 * Kl ** 3) * q(1, 2)
    head0 = Kl * q(0, 0) + sK ** 2 / Kl * q(0, 1)
    c2 = 53 * pi2 * psi0 / sK ** 4 * head1 + 53 * pi2 * p1 / sK ** 2 * head0
    c3 = (9 * p2 / sK ** 2 * (2 * Kl * q(0, 0) + 3 * sK ** 2 / Kl * q(0, 1))
          + 23 * pi2 * p1 / sK ** 4 * (Kl * q(1, 0) + sK ** 2 / Kl * q(1, 1)
                                       + sK ** 4 / (3 * Kl ** 3) * q(1, 2))
          + 9 * p0 / sK ** 6 * (2 * Kl * q(2, 0) + 3 * sK ** 2 / Kl * q(2, 1)
                                + 2 * sK ** 4 / (3 * Kl ** 3) * q(2, 2)
                                + sK ** 6 / (5 * Kl ** 5) * q(2, 3)))
    G = ONE + ONE / Kl ** 2
    c4 = (13.5 * w2 / s * G ** 2 * (g(0, 0) + g(0, 1))
          + 38 * w1 / s ** 3 * G ** 3 * (g(1, 0) + 8 * g(1, 1) + 8 / 3 * g(1, 2)
                                         + s ** 2 * (g(0, 0) + 2 * g(0, 1)))
          + 92 * w0 / s ** 5 * G ** 4 * (g(2, 0) + 3 * g(2, 1) + g(2, 2) + 0.6 * g(2, 3)
                                         + s ** 2 * (g(1, 0) + 4 * g(1, 1) + 4 / 3 * g(1, 2))
                                         + s ** 4 * (g(0, 0) + g(0, 1))))
    return c1, c2, c3, c4


def _c_e(nb, sK, s, zeK, ze, K, eta0, N):
    if N == 0:
        return (LogMagnitude.zero(),) * 4
    if eta0 is None:
        raise ValueError("bound states present: eta0 is required")
    p0, p1, p2 = (x ** 2 for x in nb.sup)
    w0, w1, w2 = (x ** 2 for x in nb.weighted)
    psi0 = nb.psi0 ** 2
    e = L(eta0)
    n = L(N)
    pi2 = PI ** 2
    c1 = 81 * pi2 / 2 * psi0 / e * zeK[0] ** 2 * n
    c2 = 105 * pi2 / 4 * (psi0 / (e ** 3 * sK ** 2) * zeK[1] ** 2 + p1 / e * zeK[0] ** 2) * n
    c3 = (9 * p0 / (e ** 5 * sK ** 4) * zeK[2] ** 2 + 166 * p1 / (e ** 3 * sK ** 2) * zeK[1] ** 2
          + 9 * p2 * zeK[0] ** 2 / e) * n
    G = ONE + ONE / L(K) ** 2
    es = e * s
    c4 = (13.5 * w0 / (e ** 5 * s ** 4) * G ** 4 * (ze[2] ** 2 + es ** 2 * ze[1] ** 2 + es ** 4 * ze[0] ** 2)
          + 12 * w1 / (e ** 3 * s ** 2) * G ** 3 * (ze[1] ** 2 + es ** 2 * ze[0] ** 2)
          + 9 / 8 * w2 / e * G ** 2 * ze[0] ** 2) * n
    return c1, c2, c3, c4


def dispersive_constants(norms, sc, z, K=None, eta0=None, N=0):
    """c_1..c_4 for the continuous part (both forms) and for the bound-state part."""
    K = sc.K if K is None else K
    sK, s = sc.s_K_lm, sc.s_lm
    if not L(K).log10_mag > s.log10_mag:
        raise ValueError("need K > s")
    simplified = None
    if max(s.log10_mag, sK.log10_mag, math.log10(K)) <= 0:
        simplified = _c_ac_simplified(norms, sK, s, z.ac_K_sum, z.ac_sum, K)
    pure = _c_ac_pure(norms, sK, s, z.ac_K, z.ac, K)
    ce = _c_e(norms, sK, s, z.e_K, z.e, K, eta0, N)
    return DispersiveConstants(simplified, pure, ce)


# ---------------------------------------------------------------- bound curve

@dataclass
class BoundSet:
    structural: StructuralConstants
    C_K: tuple
    C_global: tuple
    z: ZTables
    norms: NormBounds
    c_ac: tuple
    c_ac_pure: tuple
    c_e: tuple
    lam: int
    k0: complex
    R: float

    def to_dict(self):
        return {
            "structural": self.structural.to_dict(),
            "C_K": [_f(c) for c in self.C_K], "C_global": [_f(c) for c in self.C_global],
            "z": self.z.to_dict(), "norms": self.norms.to_dict(),
            "c_ac": [_lm_json(c) for c in self.c_ac],
            "c_ac_pure": [_lm_json(c) for c in self.c_ac_pure],
            "c_e": [_lm_json(c) for c in self.c_e],
            "lambda": self.lam, "k0": [self.k0.real, self.k0.imag], "R": self.R,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def bound_set(pot, spectral, R, K=None, bound_mode=False, r0=None, certify=True):
    """Run the whole constant pipeline with the Gamow state of the first resonance as psi."""
    sc = structural(spectral, pot, K, bound_mode=bound_mode, r0=r0, certify=certify)
    CK = c_constants_K(sc)
    C = c_constants_global(sc)
    eta0 = min(spectral.bound) if spectral.bound else None
    z = z_tables(sc, CK, C, R, eta0)
    a0, b0 = spectral.resonances[0]
    k0 = complex(a0, -b0)
    nb = gamow_norm_bounds(k0, R, sc.K, CK, C, sc.s_lm, sc.s_K_lm, spectral.lam)
    dc = dispersive_constants(nb, sc, z, sc.K, eta0, len(spectral.bound))
    return BoundSet(sc, CK, C, z, nb, dc.best, dc.pure, dc.e, spectral.lam, k0, R)


def bound_curve(c, t):
    """lambda (c1/t + c2/t^2) + c3/t^3 + c4/t^4, summed over the ac and bound-state parts."""
    if t <= 0:
        raise ValueError("t must be positive")
    tl = L(t)
    out = LogMagnitude.zero()
    for cs in (c.c_ac, c.c_e):
        c1, c2, c3, c4 = cs
        if c.lam:
            out = out + c1 / tl + c2 / tl ** 2
        out = out + c3 / tl ** 3 + c4 / tl ** 4
    return out


@dataclass
class Crossover:
    lifetime_scale: float        # (4 alpha beta)^{-4/3}
    t_useful: float              # bound / ||f_R||^2 = 1 here, smaller afterwards
    ratio_at: dict               # multiple of lifetime_scale -> bound / ||f_R||^2


def crossover_time(c, gamma=None, norm_sq=None):
    """Where the bound divided by ||f_R||^2 drops to one."""
    if gamma is None:
        gamma = 4 * c.k0.real * (-c.k0.imag)
    norm_sq = gamow_norm_squared(c.k0, c.R) if norm_sq is None else _lm(norm_sq)
    scale_log = -4.0 / 3.0 * math.log10(gamma)

    def excess(logt):
        return (bound_curve(c, 10.0 ** logt) / norm_sq).log10_mag

    lo, hi = -30.0, 30.0
    while excess(lo) < 0:
        lo -= 30.0
    while excess(hi) > 0:
        hi += 30.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    ratios = {m: (bound_curve(c, m * 10.0 ** scale_log) / norm_sq).to_float()
              for m in (0.1, 1.0, 20.0)}
    return Crossover(10.0 ** scale_log, 10.0 ** hi, ratios)


def bound_curve_csv(c, times, norm_sq=None):
    """CSV lines of (t, sign, log10 bound, log10 bound/||f_R||^2)."""
    norm_sq = gamow_norm_squared(c.k0, c.R) if norm_sq is None else _lm(norm_sq)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["t", "sign", "log10_bound", "log10_ratio"])
    for t in times:
        b = bound_curve(c, t)
        w.writerow([f"{t:.12g}", b.sign, f"{b.log10_mag:.12g}",
                    f"{(b / norm_sq).log10_mag:.12g}"])
    return buf.getvalue()


# ---------------------------------------------------------------- empirical S-matrix check

@dataclass
class SMatrixCheck:
    maxima: list       # max |S^(n)| over the grid, n = 1, 2, 3
    bounds: list       # C_n / s^n as LogMagnitude
    argmax: list
    passed: bool


def smatrix_bound_check(pot, sc, C, grid, local=True):
    """Compare max |S^(n)(k)| on grid with C_n / s^n (s_K when local)."""
    s = sc.s_K_lm if local else sc.s_lm
    grid = np.asarray(grid, dtype=float)
    if local and np.any(grid >= sc.K):
        raise ValueError("grid must lie in [0, K) for the local bounds")
    derivs = [s_matrix_derivatives(pot, float(k), 3) for k in grid]
    maxima, argmax, bounds = [], [], []
    ok = True
    for n in (1, 2, 3):
        vals = np.array([abs(d[n]) for d in derivs])
        i = int(np.nanargmax(vals))
        bound = C[n - 1] / s ** n
        maxima.append(float(vals[i]))
        argmax.append(float(grid[i]))
        bounds.append(bound)
        if not np.all(np.isfinite(vals)) or L(vals[i]).log10_mag > bound.log10_mag:
            ok = False
    return SMatrixCheck(maxima, bounds, argmax, ok)


# ---------------------------------------------------------------- reference comparison

URANIUM_REFERENCE = {"z_ac(0)": 5.1141, "c3": 3.3519e89, "c4": 1.2293e235}


def discrepancy_report(bs, reference=URANIUM_REFERENCE):
    """Computed constants next to reference values, with the inputs that drive them.

    A second column evaluates z_ac(0) with the local constant C_{1,K} in
    place of C_1, the one substitution found that reproduces 5.1141.
    """
    sc = bs.structural
    computed = {"z_ac(0)": bs.z.ac_sum[0], "c3": bs.c_ac[2], "c4": bs.c_ac[3]}
    mixed = 1 + (2 * L(bs.R) * sc.s_lm + bs.C_K[0]) / 2
    rows = []
    for key, ref in reference.items():
        got = computed[key]
        rows.append({"quantity": key, "computed": _f(got), "log10_computed": got.log10_mag,
                     "reference": ref, "log10_reference": math.log10(ref),
                     "log10_difference": got.log10_mag - math.log10(ref)})
    trail = {
        "s_K": _f(sc.s_K_lm), "inv_s": sc.inv_s.log10_mag, "K": sc.K, "R": bs.R,
        "C_K": [_f(c) for c in bs.C_K], "C": [_f(c) for c in bs.C_global],
        "z_ac_K_sum": [bs.z.ac_K_sum[n].log10_mag for n in range(3)],
        "z_ac_sum": [_f(bs.z.ac_sum[n]) for n in range(3)],
        "sup_norms_log10": [x.log10_mag for x in bs.norms.sup],
        "weighted_norms_log10": [x.log10_mag for x in bs.norms.weighted],
        "c_ac_log10": [x.log10_mag for x in bs.c_ac],
        "c_ac_pure_log10": [x.log10_mag for x in bs.c_ac_pure],
        "z_ac(0)_with_C1K": _f(mixed),
    }
    return {"rows": rows, "trail": trail}
