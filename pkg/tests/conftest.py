"""Prints one PASS/FAIL line per acceptance criterion after the run."""

_acceptance = {}


def _label(nodeid: str) -> str:
    # test_ac07_grid_oracle -> "AC07 grid oracle"
    parts = nodeid.split("::")[-1].split("_")[1:]
    return " ".join([parts[0].upper()] + parts[1:])


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_ac" not in report.nodeid:
        return
    if report.failed or report.when == "call":
        _acceptance.setdefault(_label(report.nodeid), "passed")
        if report.failed:
            _acceptance[_label(report.nodeid)] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance):
        mark = "PASS" if _acceptance[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}")
