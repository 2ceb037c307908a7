"""Shared pytest hooks.

The acceptance gate in test_acceptance.py is one test per criterion; this
summary hook re-prints their verdicts as one line each so a plain
`pytest -v` log ends with a readable go/no-go table.
"""
import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    verdicts = {}
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"),
                           ("error", "FAIL"), ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if not m:
                continue
            num, name = int(m.group(1)), m.group(2).replace("_", " ")
            # setup/teardown reports must not overwrite the call verdict
            if num not in verdicts or label == "FAIL":
                verdicts[num] = (name, label)
    if not verdicts:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(verdicts):
        name, label = verdicts[num]
        terminalreporter.write_line(f"criterion {num:02d} {name}: {label}")
