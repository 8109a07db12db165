import pathlib

import pytest

from mvol.profiles import Profile
from mvol.volumes import MemoStore, a_value_fast, minimal_strata_a

CACHE_DIR = pathlib.Path(__file__).parent / "_cache"
CACHE_FILE = CACHE_DIR / "warm.mvcache"


@pytest.fixture(scope="session")
def warm_store() -> MemoStore:
    """Shared memo store for the heavy tests, persisted across runs.

    Warms the one-singularity family through genus 60, the equal-pair
    family through (40, 40), and the length-3 staircase, so fit and
    residual tests run from cache after the first session.
    """
    store = MemoStore()
    if CACHE_FILE.exists():
        store.load(CACHE_FILE)
    minimal_strata_a(60, store)
    for k in range(10, 41):
        a_value_fast(Profile((k, k)), store)
    for k in range(2, 28):
        mu = Profile((k, k, k)) if k % 2 else Profile((k, k, k + 1))
        if mu.genus is not None and mu.genus <= 40:
            a_value_fast(mu, store)
    if store.dirty:
        CACHE_DIR.mkdir(exist_ok=True)
        store.save(CACHE_FILE)
    return store


@pytest.fixture()
def store() -> MemoStore:
    return MemoStore()
