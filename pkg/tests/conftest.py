import pytest

from optbench import _kernels


@pytest.fixture(params=_kernels.available())
def backend(request):
    """Run a test under each available kernel backend."""
    prev = _kernels.active_name()
    _kernels.use(request.param)
    yield request.param
    _kernels.use(prev)


@pytest.fixture
def both_backends():
    """Names of all importable backends (for explicit cross-checks)."""
    return _kernels.available()
