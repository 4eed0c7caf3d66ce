import pytest

from labelgap.synthgen import NOISELESS, SynthConfig, generate_dataset

SMALL_REPS = {"slow": 1, "normal": 1, "fast": 1}


@pytest.fixture(scope="session")
def small_dataset():
    """One repetition per stacking order and speed: 18 recordings, 144 segments."""
    return generate_dataset(SynthConfig(seed=21, repetitions=SMALL_REPS))


@pytest.fixture(scope="session")
def noiseless_dataset():
    return generate_dataset(SynthConfig(seed=22, noise=NOISELESS, repetitions=SMALL_REPS))


_criteria = {}


@pytest.fixture
def measured(request):
    """Dict of measured values printed next to the criterion's verdict."""
    out = {}
    request.node.user_properties.append(("measured", out))
    return out


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, text = mark.args
    values = dict(item.user_properties).get("measured", {})
    prev = _criteria.get(number)
    ok = rep.passed and (prev is None or prev[0])
    _criteria[number] = (ok, text, values)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        ok, text, values = _criteria[number]
        detail = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in values.items())
        tr.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {text}" + (f"  [{detail}]" if detail else ""))
