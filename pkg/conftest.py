"""Root pytest hooks: print one verdict line per acceptance criterion.

Acceptance tests are named test_<criterion>_<slug> (e.g. test_p1_...). After
the run, every criterion that was exercised gets exactly one PASS/FAIL line,
FAIL winning when any of its cases failed or errored.
"""
import re

_CRITERION_RE = re.compile(r"test_([ps]\d+)_(\w+?)(?:\[.*\])?$")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    verdicts: dict[str, dict[str, object]] = {}
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "acceptance" not in nodeid:
                continue
            match = _CRITERION_RE.search(nodeid)
            if not match:
                continue
            criterion = match.group(1).upper()
            entry = verdicts.setdefault(
                criterion, {"slug": match.group(2).replace("_", " "), "failed": False}
            )
            if outcome != "passed":
                entry["failed"] = True
    if not verdicts:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion in sorted(verdicts):
        entry = verdicts[criterion]
        verdict = "FAIL" if entry["failed"] else "PASS"
        terminalreporter.write_line(f"{criterion} ({entry['slug']}): {verdict}")
