import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# acceptance results, filled by test_acceptance.py: name -> (passed, detail)
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s[1:])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")
