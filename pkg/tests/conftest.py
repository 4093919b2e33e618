import sys
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from baxxz.chain import ChainSpec
from baxxz.exact_diag import entanglement_spectrum

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@lru_cache(maxsize=None)
def _ed(N, delta, Delta, L_A):
    return entanglement_spectrum(ChainSpec(N, delta, Delta, L_A=L_A))


@pytest.fixture(scope="session")
def ed():
    """Memoized ``(ground_state, spectrum)`` for ``(N, delta, Delta, L_A)``."""
    return _ed


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    # never touch the user's cache from tests
    monkeypatch.setenv("BAXXZ_CACHE_DIR", str(tmp_path / "cache"))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
