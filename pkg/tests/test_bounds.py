import json
import math

import numpy as np
import pytest

from qtime import bounds, jost
from qtime.jost import barrier
from qtime.numerics import LogMagnitude


def test_local_constants(uranium_bounds):
    C1, C2, C3 = (c.to_float() if isinstance(c, LogMagnitude) else float(c) for c in uranium_bounds.C_K)
    assert C1 == pytest.approx(8.2282, abs=1e-3)
    assert C2 == pytest.approx(89.885, abs=0.05)
    assert C3 == pytest.approx(1109.7, abs=0.5)


def test_global_constants(uranium_bounds):
    got = [c.to_float() if isinstance(c, LogMagnitude) else float(c) for c in uranium_bounds.C_global]
    assert got == pytest.approx([2.0, 12.0, 60.0], abs=1e-3)


def test_zero_count_and_inverse_s(uranium_bounds):
    sc = uranium_bounds.structural
    assert sc.nu_K_tilde == pytest.approx(2.9314e5, rel=1e-3)
    assert sc.inv_s.to_float() == pytest.approx(2.0837e44, rel=1e-3)
    assert sc.nu_K_tilde_is_bound
    assert int(sc.exclusion) == 0


def test_dispersive_constants_in_band(uranium_bounds):
    c3, c4 = uranium_bounds.c_ac[2], uranium_bounds.c_ac[3]
    assert abs(c3.log10_mag - 89.525) <= 3
    assert abs(c4.log10_mag - 235.090) <= 3


def test_pure_form_not_larger_than_simplified(uranium_bounds):
    for a, b in zip(uranium_bounds.c_ac_pure, uranium_bounds.c_ac):
        assert a.log10_mag <= b.log10_mag + 1e-9


def test_discrepancy_report(uranium_bounds):
    rep = bounds.discrepancy_report(uranium_bounds)
    text = json.dumps(rep)
    assert "z_ac(0)" in text
    # the local-constant substitution reproduces the reference value of z_ac(0)
    assert float(rep["trail"]["z_ac(0)_with_C1K"]) == pytest.approx(5.1141, abs=1e-4)


def test_bound_set_serialises(uranium_bounds):
    d = json.loads(uranium_bounds.to_json())
    assert d["structural"]["exclusion_count"] == 0
    assert d["lambda"] == 0


def test_bound_curve_decreases(uranium_bounds):
    vals = [bounds.bound_curve(uranium_bounds, t).log10_mag for t in (1e40, 1e45, 1e50, 1e60)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        bounds.bound_curve(uranium_bounds, 0.0)


def test_bound_curve_csv(uranium_bounds):
    text = bounds.bound_curve_csv(uranium_bounds, [1e45, 1e50])
    lines = text.strip().splitlines()
    assert lines[0] == "t,sign,log10_bound,log10_ratio" and len(lines) == 3


def test_crossover(uranium_bounds):
    co = bounds.crossover_time(uranium_bounds)
    ratio = bounds.bound_curve(uranium_bounds, co.t_useful) / bounds.gamow_norm_squared(
        uranium_bounds.k0, uranium_bounds.R)
    assert abs(ratio.log10_mag) < 1e-6


def test_gamow_norm_closed_form():
    k0 = complex(3.0, -0.01)
    R = 2.0
    n = bounds.gamow_norm_squared(k0, R).to_float()
    assert n == pytest.approx(math.exp(2 * 0.01 * R) / (2 * 0.01), rel=1e-12)


def test_missing_resonances_rejected():
    pot = barrier(1, 2, 230)
    sd = jost.find_spectral_data(pot, region=(0.0, 4.0, -1.0, 0.0))
    with pytest.raises(ValueError):
        bounds.structural(sd, pot, K=3.0)


@pytest.mark.parametrize("pot", [barrier(1, 2, 230), barrier(1, 3, 480)], ids=["230", "480"])
def test_s_matrix_derivatives_respect_bounds(pot):
    sd = jost.find_spectral_data(pot, region=(0.0, 30.0, -4.0, 0.0))
    sc = bounds.structural(sd, pot, bound_mode=True)
    local = bounds.smatrix_bound_check(pot, sc, bounds.c_constants_K(sc),
                                       np.linspace(0, sc.K, 200, endpoint=False))
    glob = bounds.smatrix_bound_check(pot, sc, bounds.c_constants_global(sc),
                                      np.linspace(0, 3 * sd.resonances[0][0], 1501), local=False)
    assert local.passed and glob.passed
