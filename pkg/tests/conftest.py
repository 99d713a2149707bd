import pytest

from rescuectx import _pure

try:
    from rescuectx import _speedups
except ImportError:  # extension not built
    _speedups = None

BACKENDS = [pytest.param(_pure, id="python")]
if _speedups is not None:
    BACKENDS.append(pytest.param(_speedups, id="cython"))


@pytest.fixture(params=BACKENDS)
def kernels(request):
    """Each kernel implementation in turn."""
    return request.param


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
