import hypothesis
import numpy as np
import pytest

from biholder.space import SampledSpace

hypothesis.settings.register_profile("default", max_examples=40, deadline=None)
hypothesis.settings.load_profile("default")

# filled by tests/test_acceptance.py, one entry per criterion
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def two_point():
    return SampledSpace(coords=np.array([[0.0], [1.0]]), weights=np.array([0.5, 0.5]), ids=(0, 1))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[2:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'}  {detail}")
