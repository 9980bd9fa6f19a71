"""Bohmian trajectories of free packet states in one dimension (hbar = 1).

The guiding field is v = j / |psi|^2.  Ensembles are integrated as vector
ODEs over sorted chunks of neighbouring starting points, so each chunk shares
one step sequence and the run stays deterministic.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from . import packets
from .numerics import integrate_adaptive

NODE_THRESHOLD = 1e-12


class NodeError(ArithmeticError):
    """The guiding field was requested too close to a node of the wave function."""


def _terms(state):
    return packets._as_sum(state).terms


def peak_density(state, t):
    """Upper bound on max_x |psi(x, t)|^2 from the packet amplitudes."""
    amp = sum(abs(c) * packets._QUARTER / math.sqrt(float(p.width(t))) for c, p in _terms(state))
    return amp * amp


def support(state, t, spread=10.0):
    """Interval holding the packets at time t, spread widths either side."""
    lo = min(p.x0 + p.v * (t - p.t0) - spread * float(p.width(t)) for _, p in _terms(state))
    hi = max(p.x0 + p.v * (t - p.t0) + spread * float(p.width(t)) for _, p in _terms(state))
    return lo, hi


def _velocity(state, x, t, floor):
    psi, dpsi = packets._as_sum(state).amplitude_and_derivative(x, t)
    rho = np.abs(psi) ** 2
    j = np.imag(np.conj(psi) * dpsi) / state.mass
    return j, rho, rho < floor


def velocity_field(state, x, t, node_threshold=NODE_THRESHOLD):
    """j / |psi|^2; raises NodeError where |psi|^2 < node_threshold * peak."""
    state = packets._as_sum(state)
    j, rho, node = _velocity(state, x, t, node_threshold * peak_density(state, t))
    if np.any(node):
        raise NodeError(f"|psi|^2 below {node_threshold:g} x peak at t={t}")
    return j / rho


def _speed_cap(state):
    return max(abs(p.v) + 10.0 / (p.mass * p.sigma0) for _, p in _terms(state))


def _capped_rhs(state, node_threshold):
    cap = _speed_cap(state)

    def rhs(t, y):
        j, rho, node = _velocity(state, y, t, node_threshold * peak_density(state, t))
        v = np.where(node, 0.0, j / np.where(node, 1.0, rho))
        return np.clip(v, -cap, cap)
    return rhs


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    status: str                          # "completed", "crossed_at" or "node_stalled"
    crossings: list = field(default_factory=list)    # (t, direction) at the detector

    @property
    def samples(self):
        return list(zip(self.times, self.positions))


def trajectory(state, q0, t_grid, detector=None, rtol=1e-10, atol=1e-10,
               node_threshold=NODE_THRESHOLD, node_budget=None):
    """Integrate dQ/dt = v(Q, t) from Q(t_grid[0]) = q0 and sample on t_grid.

    Crossings of the detector are located by Brent's method on the step
    interpolant.  A trajectory that spends more than node_budget time units
    (default 1% of the span) where |psi|^2 < node_threshold * peak is
    reported as node_stalled.
    """
    state = packets._as_sum(state)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    t0, t1 = t_grid[0], t_grid[-1]
    if not abs(packets.amplitude(state, q0, t0)) ** 2 > node_threshold * peak_density(state, t0):
        raise NodeError(f"starting point {q0} sits on a node")
    budget = 0.01 * (t1 - t0) if node_budget is None else node_budget
    rhs = _capped_rhs(state, node_threshold)
    solver = integrate.DOP853(lambda t, y: rhs(t, y), t0, np.array([float(q0)]), t1,
                              rtol=rtol, atol=atol)
    out = [float(q0)]
    gi = 1
    crossings = []
    node_time = 0.0
    status = "completed"
    while solver.status == "running":
        solver.step()
        if solver.status == "failed":
            status = "node_stalled"
            break
        ta, tb = solver.t_old, solver.t
        sol = solver.dense_output()
        while gi < len(t_grid) and t_grid[gi] <= tb:
            out.append(float(sol(t_grid[gi])[0]))
            gi += 1
        floor = node_threshold * peak_density(state, tb)
        if abs(packets.amplitude(state, solver.y[0], tb)) ** 2 < floor:
            node_time += tb - ta
            if node_time > budget:
                status = "node_stalled"
                break
        if detector is not None:
            ya, yb = float(sol(ta)[0]) - detector, float(sol(tb)[0]) - detector
            if ya * yb < 0:
                tc = optimize.brentq(lambda s: float(sol(s)[0]) - detector, ta, tb, xtol=1e-13)
                crossings.append((tc, 1 if yb > 0 else -1))
    if status == "completed" and crossings:
        status = "crossed_at"
    n = len(out)
    return Trajectory(t_grid[:n], np.array(out), status, crossings)


def evolve_ensemble(state, q0s, t0, t_eval, rtol=1e-9, atol=1e-9, node_threshold=NODE_THRESHOLD):
    """Positions of many trajectories at the times t_eval (shape n x len(t_eval))."""
    state = packets._as_sum(state)
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    rhs = _capped_rhs(state, node_threshold)
    res = integrate.solve_ivp(rhs, (t0, float(t_eval[-1])), np.asarray(q0s, dtype=float),
                              method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
    if not res.success:
        raise ArithmeticError(f"ensemble integration failed: {res.message}")
    return res.y


def sample_initial(state, t, n, seed=0, stratified=False, n_grid=20001):
    """Draw n points from |psi(x, t)|^2 by inverse CDF on a fine grid."""
    if n < 1:
        raise ValueError("need at least one sample")
    lo, hi = support(state, t)
    x = np.linspace(lo, hi, n_grid)
    rho = packets.density(state, x, t)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(x))])
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    u = (np.arange(n) + rng.random(n)) / n if stratified else rng.random(n)
    return np.interp(u, cdf, x)


@dataclass
class TruncatedCurrent:
    edges: np.ndarray
    mass: np.ndarray            # weight per bin, as a fraction of all trajectories
    no_arrival: float
    first_crossings: np.ndarray  # (t, direction) per arriving trajectory
    n_samples: int

    @property
    def density(self):
        return self.mass / np.diff(self.edges)

    @property
    def total_mass(self):
        return len(self.first_crossings) / self.n_samples + self.no_arrival

    def write_csv(self, path_or_file):
        own = isinstance(path_or_file, str)
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["t_lo", "t_hi", "mass"])
            for a, b, m in zip(self.edges[:-1], self.edges[1:], self.mass):
                w.writerow([f"{a:.15e}", f"{b:.15e}", f"{m:.15e}"])
        finally:
            if own:
                fh.close()


def _first_crossings(state, q, D, t0, t1, rtol, atol, node_threshold):
    solver = integrate.DOP853(_capped_rhs(state, node_threshold), t0, q, t1, rtol=rtol, atol=atol)
    first_t = np.full(q.size, np.nan)
    first_dir = np.zeros(q.size)
    while solver.status == "running":
        ya = solver.y - D
        solver.step()
        if solver.status == "failed":
            raise ArithmeticError("ensemble integration failed")
        yb = solver.y - D
        hit = np.nonzero((ya * yb < 0) & np.isnan(first_t))[0]
        if hit.size:
            sol = solver.dense_output()
            for i in hit:
                first_t[i] = optimize.brentq(lambda s: sol(s)[i] - D, solver.t_old, solver.t,
                                             xtol=1e-12)
                first_dir[i] = 1.0 if yb[i] > 0 else -1.0
    return first_t, first_dir


def truncated_current(state, D, window, n_samples=10000, seed=0, bins=60, convention="signed",
                      stratified=False, rtol=1e-8, atol=1e-8, node_threshold=NODE_THRESHOLD,
                      chunk=250):
    """Histogram of first detector crossings of an ensemble drawn from |psi|^2 at window start.

    convention="signed" weights each first crossing by its direction (+1 for
    left to right); "unsigned" counts every first crossing as +1.  Later
    crossings are discarded.  Trajectories that never reach D inside the
    window make up no_arrival.
    """
    if convention not in ("signed", "unsigned"):
        raise ValueError(f"unknown convention {convention!r}")
    state = packets._as_sum(state)
    t0, t1 = window.t_start, window.t_end
    q = sample_initial(state, t0, n_samples, seed, stratified)
    first_t = np.full(n_samples, np.nan)
    first_dir = np.zeros(n_samples)
    # neighbouring trajectories need similar steps; integrate them in sorted chunks
    order = np.argsort(q, kind="stable")
    for start in range(0, n_samples, chunk):
        idx = order[start:start + chunk]
        t_hit, d_hit = _first_crossings(state, q[idx], D, t0, t1, rtol, atol, node_threshold)
        first_t[idx], first_dir[idx] = t_hit, d_hit
    arrived = ~np.isnan(first_t)
    weights = first_dir[arrived] if convention == "signed" else np.ones(arrived.sum())
    edges = np.linspace(t0, t1, bins + 1)
    mass, _ = np.histogram(first_t[arrived], bins=edges, weights=weights)
    return TruncatedCurrent(edges, mass / n_samples, float(1.0 - arrived.mean()),
                            np.column_stack([first_t[arrived], first_dir[arrived]]), n_samples)


def negative_velocity_set(state, t, n_grid=20001):
    """Intervals of x where j(x, t) < 0, edges refined by Brent's method."""
    lo, hi = support(state, t)
    xs = np.linspace(lo, hi, n_grid)
    j = packets.current(state, xs, t)
    f = lambda x: float(packets.current(state, x, t))
    out = []
    neg = j < 0
    i = 0
    while i < n_grid:
        if not neg[i]:
            i += 1
            continue
        k = i
        while k + 1 < n_grid and neg[k + 1]:
            k += 1
        a = lo if i == 0 else optimize.brentq(f, xs[i - 1], xs[i], xtol=1e-13)
        b = hi if k == n_grid - 1 else optimize.brentq(f, xs[k], xs[k + 1], xtol=1e-13)
        out.append((a, b))
        i = k + 1
    return out


def prob_negative_velocity(state, t, n_grid=20001):
    """Probability that the particle has negative Bohmian velocity at time t."""
    state = packets._as_sum(state)
    rho = lambda x: float(packets.density(state, x, t))
    total = sum(integrate_adaptive(rho, a, b, tol=1e-12).value
                for a, b in negative_velocity_set(state, t, n_grid) if b > a)
    return total / state.norm_squared()
