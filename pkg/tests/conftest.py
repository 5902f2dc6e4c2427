import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "sgcov", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("sgcov")

LAM, D, SIGMA2, LAM_P = 0.01, 15.0, 1e-4, 4e-4


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# --------------------------------------------------------------------------
# acceptance report: one line per criterion at the end of the run
# --------------------------------------------------------------------------

CRITERIA = {
    1: "kernel oracle",
    2: "geometry",
    3: "single-cluster analytic vs MC",
    4: "coverage gap at 0.8 (uniform vs closest)",
    5: "coverage-optimal receiver distance",
    6: "lower-bound dominance and tightness",
    7: "infinite-network limit",
    8: "contact distance CDF vs MC",
    9: "multi-cluster analytic vs MC and offset monotonicity",
    10: "spectral efficiency",
    11: "CLI determinism",
}
_RESULTS: dict[int, list[tuple[bool, str]]] = {}


class AcceptanceRecorder:
    def __call__(self, criterion: int, ok: bool, detail: str) -> None:
        _RESULTS.setdefault(criterion, []).append((bool(ok), detail))


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, name in CRITERIA.items():
        recs = _RESULTS.get(k)
        if not recs:
            tr.write_line(f"criterion {k:2d} [{name}]: NOT RUN")
            continue
        status = "PASS" if all(ok for ok, _ in recs) else "FAIL"
        tr.write_line(f"criterion {k:2d} [{name}]: {status}")
        for ok, detail in recs:
            tr.write_line(f"    {'ok  ' if ok else 'FAIL'} {detail}")
