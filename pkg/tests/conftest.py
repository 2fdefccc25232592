import re

_AC = re.compile(r"test_acceptance\.py::test_ac(\d+)_(\w+)")
_results = {}


def pytest_runtest_logreport(report):
    match = _AC.search(report.nodeid)
    if not match:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("measured", "")
        _results[int(match.group(1))] = (match.group(2).replace("_", " "), report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        title, outcome, detail = _results[num]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"AC-{num} {verdict}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
