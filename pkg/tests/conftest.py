import warnings

import numpy as np
import pytest

from doublelambda.doppler import VelocityGrid
from doublelambda.scheme import FieldState, SchemeParams, Topology, na2_hinze


def random_scheme(rng, topology: str) -> SchemeParams:
    """Random but admissible relaxation constants (units of 1e6/s)."""
    lw = {k: rng.uniform(20, 200) for k in ("l", "g", "n", "m")}
    gp = {
        "gl": rng.uniform(1, 0.45 * lw["g"]),
        "gn": rng.uniform(1, 0.45 * lw["g"]),
        "mn": rng.uniform(1, 0.45 * lw["m"]),
        "ml": rng.uniform(1, 0.45 * lw["m"]),
    }
    cw = {k: rng.uniform(1, 200) for k in ("lg", "ng", "nm", "lm", "ln", "gm")}
    if topology == "open":
        pump = tuple(rng.uniform(0.1, 5, size=4))
    else:
        pump = (0.0, *rng.uniform(0.0, 20, size=3))
    return SchemeParams(
        topology=Topology(topology),
        wavelengths_nm=(655.0, 756.0, 532.0, 480.0),
        gamma_partial=gp,
        level_width=lw,
        coherence_width=cw,
        pump=pump,
        temperature=683.15,
        molar_mass=45.98,
    )


def random_fields(rng, weak: bool = True) -> FieldState:
    G1 = rng.uniform(1, 300) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    G3 = rng.uniform(1, 300) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    G2 = 0.1 * np.exp(1j * rng.uniform(0, 2 * np.pi)) if weak else 0j
    G4 = 0.1 * np.exp(1j * rng.uniform(0, 2 * np.pi)) if weak else 0j
    O1, O3, O4 = rng.uniform(-300, 300, 3)
    return FieldState((G1, G2, G3, G4), O1, O3, O4)


@pytest.fixture(scope="session")
def na2():
    return na2_hinze()


@pytest.fixture(scope="session")
def grid(na2):
    return VelocityGrid.for_params(na2)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


_ACCEPTANCE = {}


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
