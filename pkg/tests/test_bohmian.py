import math

import numpy as np
import pytest
from scipy import stats

from qtime import arrival, bohmian, packets
from qtime.arrival import ArrivalWindow
from qtime.packets import FreeGaussian1D as G, WavePacketSum


def test_single_packet_trajectory_closed_form():
    g = G(-2.0, 1.5, 0.8, 1.0)
    q0 = -1.6
    ts = np.linspace(0, 6, 13)
    tr = bohmian.trajectory(g, q0, ts)
    expected = -2.0 + 1.5 * ts + (q0 + 2.0) * g.width(ts) / 0.8
    assert tr.status == "completed"
    assert np.max(np.abs(tr.positions - expected)) < 1e-8


def test_velocity_field_matches_current_over_density():
    s = arrival.backflow_state()
    x = np.linspace(-20, 5, 11)
    v = bohmian.velocity_field(s, x, 3.0)
    assert np.allclose(v, packets.current(s, x, 3.0) / packets.density(s, x, 3.0))


def test_velocity_field_refuses_nodes():
    s = WavePacketSum(((1.0, G(0.0, 0.0, 1.0)),))
    with pytest.raises(bohmian.NodeError):
        bohmian.velocity_field(s, 80.0, 0.0)


def test_start_on_node_rejected():
    with pytest.raises(bohmian.NodeError):
        bohmian.trajectory(G(0.0, 1.0, 1.0), 60.0, [0.0, 1.0])


def test_time_grid_must_increase():
    with pytest.raises(ValueError):
        bohmian.trajectory(G(), 0.0, [0.0, 2.0, 1.0])


def test_backflow_trajectory_recrosses_detector():
    s = arrival.backflow_state()
    tr = bohmian.trajectory(s, -10.86, np.linspace(0, 12, 241), detector=0.0)
    assert tr.status == "crossed_at"
    dirs = [d for _, d in tr.crossings]
    assert dirs[:3] == [1, -1, 1]
    assert tr.samples[0] == (0.0, -10.86)


def test_ensembles_never_cross():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n_terms = int(rng.integers(1, 4))
        terms = tuple((complex(rng.normal(), rng.normal()),
                       G(rng.uniform(-6, 6), rng.uniform(-2, 2), rng.uniform(0.6, 2.0)))
                      for _ in range(n_terms))
        s = WavePacketSum(terms)
        q0 = np.sort(bohmian.sample_initial(s, 0.0, 12, seed=int(rng.integers(1 << 30))))
        q0 = np.unique(q0)
        pos = bohmian.evolve_ensemble(s, q0, 0.0, np.linspace(0.5, 3.0, 6))
        assert np.all(np.diff(pos, axis=0) > 0)


def test_equivariance():
    s = WavePacketSum(((1.0, G(-3.0, 1.0, 1.0)), (0.8, G(3.0, -1.0, 1.0))))
    q0 = bohmian.sample_initial(s, 0.0, 2000, seed=3)
    t1 = 2.5
    q1 = bohmian.evolve_ensemble(s, q0, 0.0, [t1])[:, -1]
    x = np.linspace(*bohmian.support(s, t1), 40001)
    rho = packets.density(s, x, t1)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(x))])
    cdf /= cdf[-1]
    res = stats.kstest(q1, lambda y: np.interp(y, x, cdf))
    assert res.pvalue > 0.01


def test_sampling_reproducible():
    s = arrival.backflow_state()
    a = bohmian.sample_initial(s, 0.0, 50, seed=5)
    assert np.array_equal(a, bohmian.sample_initial(s, 0.0, 50, seed=5))
    with pytest.raises(ValueError):
        bohmian.sample_initial(s, 0.0, 0)


def test_truncated_current_matches_flux():
    g = G(-5.0, 1.5, 1.0)
    w = ArrivalWindow(0.0, 0.0, 12.0)
    tc = bohmian.truncated_current(g, 0.0, w, n_samples=10000, seed=1, bins=30)
    assert tc.total_mass == pytest.approx(1.0)
    fd = arrival.flux_density(g, w)
    edges = tc.edges
    from qtime.numerics import integrate_adaptive
    exact = np.array([integrate_adaptive(lambda t: float(fd.normalized(t)), a, b).value
                      for a, b in zip(edges[:-1], edges[1:])])
    arrived = 1.0 - tc.no_arrival
    hist = tc.mass / arrived
    l1 = np.abs(hist - exact).sum()
    sd = np.sqrt(exact * (1 - exact) / (tc.n_samples * arrived)).sum()
    assert l1 < 3 * sd


def test_truncated_current_conventions_agree_without_backflow():
    g = G(-5.0, 1.5, 1.0)
    w = ArrivalWindow(0.0, 0.0, 12.0)
    a = bohmian.truncated_current(g, 0.0, w, n_samples=300, seed=2)
    b = bohmian.truncated_current(g, 0.0, w, n_samples=300, seed=2, convention="unsigned")
    assert np.array_equal(a.mass, b.mass)
    with pytest.raises(ValueError):
        bohmian.truncated_current(g, 0.0, w, n_samples=10, convention="net")


def test_truncated_current_csv(tmp_path):
    g = G(-5.0, 1.5, 1.0)
    tc = bohmian.truncated_current(g, 0.0, ArrivalWindow(0.0, 0.0, 12.0), n_samples=100, bins=5)
    p = tmp_path / "h.csv"
    tc.write_csv(str(p))
    lines = p.read_text().splitlines()
    assert lines[0] == "t_lo,t_hi,mass" and len(lines) == 6


def test_negative_velocity_probability_at_backflow():
    s = arrival.backflow_state()
    assert bohmian.prob_negative_velocity(s, 5.2) == pytest.approx(0.008, abs=0.001)


def test_single_packet_velocity_set():
    # at t = 0 the field of one packet is the constant v
    assert bohmian.negative_velocity_set(G(0.0, 3.0, 1.0), 0.0) == []
    assert bohmian.prob_negative_velocity(G(0.0, 3.0, 1.0), 0.0) == 0.0
    # and a left mover has negative velocity everywhere
    assert bohmian.prob_negative_velocity(G(0.0, -3.0, 1.0), 0.0) == pytest.approx(1.0, rel=1e-10)
