import pytest

from dpk.casestudy import write_casestudy


@pytest.fixture(scope="session")
def casestudy(tmp_path_factory):
    """Paths of the generated carbon-interstitial inputs."""
    return write_casestudy(tmp_path_factory.mktemp("casestudy"))


# one summary line per acceptance criterion -----------------------------------

_criteria: dict[int, dict] = {}


def pytest_runtest_setup(item):
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        item.user_properties.append(("criterion", marker.args[0]))
        item.user_properties.append(("title", marker.kwargs.get("title", item.name)))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    entry = _criteria.setdefault(props["criterion"], {"title": props["title"], "ok": True, "seconds": 0.0})
    if report.when == "call":
        entry["seconds"] += report.duration
    if report.failed or (report.when == "call" and report.skipped):
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        verdict = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(
            f"criterion {number}: {verdict}  {entry['title']}  ({entry['seconds']:.2f} s)"
        )
