import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from qtime import decay
from qtime.decay import DecayModel, PreconditionError
from qtime.bounds import bound_set
from qtime.jost import barrier, find_spectral_data
from qtime.numerics import AccuracyWarning, LogMagnitude



@pytest.fixture(scope="module")
def uranium_model(uranium, uranium_spectral):
    return DecayModel.from_potential(uranium, R=1.4e14, spectral=uranium_spectral)


@pytest.fixture(scope="module")
def wide():
    return DecayModel.from_potential(barrier(1, 1.5, 40))


def _float(x):
    return x.to_float() if isinstance(x, LogMagnitude) else float(x)


def test_model_validation():
    with pytest.raises(ValueError):
        DecayModel(None, 3.0, 1e-3, 1.0, 1e-3)
    with pytest.raises(ValueError):
        DecayModel.synthetic_model(3.0, -1.0)
    with pytest.raises(ValueError):
        DecayModel.from_potential(barrier(1, 2, 30), R=1.5)


def test_uranium_norm(uranium_model):
    assert _float(decay.norms(uranium_model)["f_R"]) == pytest.approx(3.5541e38, rel=1e-3)


def test_uranium_rate_in_si(uranium_model):
    rate = decay.to_si(decay.UnitSystem(), uranium_model.gamma, "rate")
    assert rate == pytest.approx(2.5682e-18, rel=0.01)


def test_unit_system():
    u = decay.UnitSystem()
    assert u.energy_MeV == pytest.approx(0.100756, rel=1e-4)
    with pytest.raises(ValueError):
        decay.to_si(u, 1.0, "mass")


def test_norms_match_quadrature(wide):
    # ||psi||^2 by Plancherel from the momentum representation
    a = wide.alpha
    f = lambda k: abs(decay.psi_hat(wide, np.array([k]))[0]) ** 2
    tot = (integrate.quad(f, 0, a - 1, limit=500)[0]
           + integrate.quad(f, a - 1, a + 1, points=[a], limit=2000)[0]
           + integrate.quad(f, a + 1, np.inf, limit=2000)[0])
    assert tot * decay.PLANCHEREL == pytest.approx(_float(decay.norms(wide)["psi"]), rel=1e-6)


def test_energy_density_normalised(wide):
    a = wide.alpha
    f = lambda E: float(decay.energy_density(wide, [E])[0])
    tot = (integrate.quad(f, 1e-12, (a - 1) ** 2, limit=500)[0]
           + integrate.quad(f, (a - 1) ** 2, (a + 1) ** 2, points=[a * a], limit=2000, epsrel=1e-12)[0]
           + integrate.quad(f, (a + 1) ** 2, np.inf, limit=2000)[0])
    assert tot == pytest.approx(1.0, rel=1e-6)


def test_var_energy_closed_form_against_quadrature(var_energy_pairs):
    for closed, quad in var_energy_pairs:
        assert quad == pytest.approx(closed, rel=1e-4)


def test_time0_stats():
    m = DecayModel.synthetic_model(3.0, 1e-3)
    st = decay.time0_stats(m)
    assert _float(st["mean"]) == pytest.approx(1 / 0.012)
    assert _float(st["var"]) == pytest.approx(1 / 0.012 ** 2)


def test_e_factor_small_argument():
    assert _float(decay.e_factor(1e-30, 1e-30)) == pytest.approx(math.sqrt(math.pi))
    with pytest.raises(ValueError):
        decay.e_factor(0.0, 1.0)


def test_gamow_state_error_grows_with_time():
    a = decay.gamow_state_error(3.0, 1e-3, 1.0)
    b = decay.gamow_state_error(3.0, 1e-3, 100.0)
    assert 0 < a < b
    with pytest.raises(ValueError):
        decay.gamow_state_error(3.0, 1e-3, -1.0)


def test_long_time_preconditions(wide):
    with pytest.raises(PreconditionError):
        decay.long_time_constants(wide, (1, 1, 1), (1, 1, 1), 0.1, (1, 1, 1), (1, 1, 1), K=wide.alpha / 2)


def test_uranium_budget_and_lifetime(uranium_model, uranium_bounds):
    budget = decay.error_budget(uranium_model, uranium_bounds)
    v = decay.uncertainty_verdict(uranium_model, budget)
    assert v.verdict == "inconclusive"
    lt = decay.lifetime_bracket(uranium_model, budget)
    assert not lt["degenerate"]
    tau = 1 / uranium_model.gamma
    assert _float(lt["tau_lo"]) < tau < _float(lt["tau_hi"])


def test_degenerate_lifetime_warns():
    pot = barrier(1, 2, 230)
    sd = find_spectral_data(pot, (0.0, 30.0, -4.0, 0.0))
    m = DecayModel.from_potential(pot, spectral=sd)
    bs = bound_set(pot, sd, m.R, K=m.alpha / 4, bound_mode=True, certify=False)
    with pytest.warns(AccuracyWarning):
        lt = decay.lifetime_bracket(m, decay.error_budget(m, bs))
    assert lt["degenerate"] and lt["tau_hi"] == math.inf


@pytest.mark.parametrize("exp,expected", [(80, "inconclusive"), (300, "holds")])
def test_synthetic_verdicts(exp, expected):
    m = DecayModel.synthetic_model(3.0, mp.mpf(10) ** (-exp))
    budget = decay.error_budget(m, decay.synthetic_long_time(m))
    assert decay.uncertainty_verdict(m, budget).verdict == expected


def test_synthetic_relative_error_falls_with_beta():
    rel = []
    for e in (200, 300, 400, 600):
        m = DecayModel.synthetic_model(3.0, mp.mpf(10) ** (-e))
        rel.append(_float(decay.uncertainty_verdict(
            m, decay.error_budget(m, decay.synthetic_long_time(m))).relative_error))
    assert all(b < a for a, b in zip(rel, rel[1:]))


def test_linewidth_inside_bracket(wide):
    lw = decay.linewidth(wide)
    assert lw.ratio == pytest.approx(1.0, rel=1e-3)
    if lw.bracket is not None:
        assert lw.in_bracket


def test_linewidth_narrow_resonance():
    m = DecayModel.from_potential(barrier(1, 2, 230))
    lw = decay.linewidth(m)
    assert abs(lw.ratio - 1) < 1e-12
