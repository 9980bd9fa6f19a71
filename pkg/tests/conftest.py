import pytest

from qtime import jost
from qtime.bounds import bound_set

# criterion number -> (ok, detail), filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def uranium():
    return jost.barrier(1.0, 3.0, 480.0)


@pytest.fixture(scope="session")
def uranium_spectral(uranium):
    return jost.find_spectral_data(uranium, region=(0.0, 30.0, -4.0, 0.0))


@pytest.fixture(scope="session")
def uranium_bounds(uranium, uranium_spectral):
    return bound_set(uranium, uranium_spectral, 1.4e14, bound_mode=True)


VAR_E_MODELS = (((1.0, 2.0, 30.0), 0.7), ((1.0, 1.5, 40.0), 1.0), ((1.0, 1.3, 80.0), 0.5))


@pytest.fixture(scope="session")
def var_energy_pairs():
    """(closed form, quadrature oracle) for three resonance models."""
    from qtime.decay import DecayModel, var_energy
    from oracles import var_energy_quadrature
    out = []
    for (r1, r2, v0), sigma in VAR_E_MODELS:
        m = DecayModel.from_potential(jost.barrier(r1, r2, v0), R=2.5, sigma=sigma)
        out.append((float(var_energy(m)), var_energy_quadrature(m)))
    return out


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
