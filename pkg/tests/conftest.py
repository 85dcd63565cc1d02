import pytest

from cusplab.corpus import delta, eisenstein_deg1, genus2_cusp_candidate, unary_theta
from cusplab.lattices import d4, e8, lattice_theta

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def record_criterion():
    def record(number: int, ok: bool, detail: str) -> None:
        _CRITERIA[number] = (ok, detail)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def e8_deg2_20():
    return lattice_theta(e8(), 2, 20)


@pytest.fixture(scope="session")
def e8_deg1_20():
    return lattice_theta(e8(), 1, 20)


@pytest.fixture(scope="session")
def d4_deg2():
    return lattice_theta(d4(), 2, 10)


@pytest.fixture(scope="session")
def chi10():
    return genus2_cusp_candidate(8)


@pytest.fixture(scope="session")
def delta_5000():
    return delta(5000)


@pytest.fixture(scope="session")
def e4_5000():
    return eisenstein_deg1(4, 5000)


@pytest.fixture(scope="session")
def e6_5000():
    return eisenstein_deg1(6, 5000)


@pytest.fixture(scope="session")
def theta_5000():
    return unary_theta(5000)
