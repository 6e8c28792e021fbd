import numpy as np
import pytest
from hypothesis import settings

from risadmm.channel import ChannelSet

settings.register_profile("ci", max_examples=40, deadline=None)
settings.load_profile("ci")


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_cs(rng, m=2, n=4) -> ChannelSet:
    return ChannelSet.from_links(cn(rng, n, m), cn(rng, m), cn(rng, m), cn(rng, n), cn(rng, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance reporting ------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


@pytest.fixture
def detail(request):
    """Attach a one-line measurement summary to the running criterion."""
    def put(text):
        request.node.user_properties.append(("detail", text))
        print(text)
    return put


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    marks = [k for k in report.keywords if k.startswith("criterion_")]
    if not marks:
        return
    n = int(marks[0].split("_")[1])
    text = "; ".join(v for k, v in report.user_properties if k == "detail")
    _CRITERIA[n] = ("PASS" if report.passed else "FAIL", text)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.keywords[f"criterion_{m.args[0]}"] = True


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        status, text = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {text}")
