import pytest


@pytest.fixture(autouse=True, scope="session")
def _isolated_cache(tmp_path_factory):
    mp = pytest.MonkeyPatch()
    mp.setenv("SADDLE_CACHE_DIR", str(tmp_path_factory.mktemp("saddle-cache")))
    yield
    mp.undo()
