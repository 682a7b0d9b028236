from __future__ import annotations

import functools
from pathlib import Path

from hypothesis import HealthCheck, settings

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

DATA = Path(__file__).parent / "data"


@functools.lru_cache(maxsize=None)
def small_instance(n_nodes: int, n_players: int, source_mode: str, weight_mode: str, seed: int):
    from gnepconv.flowgame import generate_instance

    return generate_instance(n_nodes, n_players, source_mode, weight_mode, seed)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[k])
