import pytest

from buot import _backend

BACKENDS = ["python"] + (["cython"] if _backend.compiled is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    old = _backend.use(request.param)
    yield request.param
    _backend.use(old)
