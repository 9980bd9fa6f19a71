"""Independent reference computations used by the tests."""

import math
import warnings

import numpy as np
from scipy import integrate

from qtime.decay import psi_hat

_X, _W = np.polynomial.legendre.leggauss(64)


def _panel_moments(model, c, lo, hi, n):
    edges = np.linspace(lo, hi, n + 1)
    out = np.zeros(3)
    for u, v in zip(edges[:-1], edges[1:]):
        k = (u + v) / 2 + (v - u) / 2 * _X
        p = np.abs(psi_hat(model, k)) ** 2 * _W * (v - u) / 2
        d = k * k - c
        out += [p.sum(), (d * p).sum(), (d * d * p).sum()]
    return out


def var_energy_quadrature(model, cutoffs=(1000.0, 2000.0)):
    """Var E from the momentum density of psi, centred at alpha^2.

    The k^4 tail of |psi_hat|^2 decays like 1/k^2, so the truncated variance
    carries a 1/K error; one Richardson step over two cutoffs removes it.
    """
    a = float(model.alpha)
    c = a * a
    f = lambda k, j: abs(psi_hat(model, np.array([k]))[0]) ** 2 * (k * k - c) ** j
    with warnings.catch_warnings():
        # asks for more than QUADPACK can certify next to the peak; the answer is still good
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        peak = np.array([integrate.quad(f, a - 1, a + 1, args=(j,), points=[a], limit=2000,
                                        epsabs=0, epsrel=1e-13)[0] for j in range(3)])
    near = peak + _panel_moments(model, c, 0.0, a - 1, 50)
    est = []
    for K in cutoffs:
        m0, m1, m2 = near + _panel_moments(model, c, a + 1, K, int(2 * K))
        est.append(m2 / m0 - (m1 / m0) ** 2)
    return 2 * est[1] - est[0]


def gaussian_norm(sigma):
    return (2 * math.pi * sigma ** 2) ** -0.25
