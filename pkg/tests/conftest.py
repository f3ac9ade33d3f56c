import os

from hypothesis import settings

import helpers

settings.register_profile("default", deadline=None, derandomize=True)
settings.register_profile("ci", deadline=None, derandomize=True, max_examples=50)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def pytest_terminal_summary(terminalreporter):
    if not helpers.ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(helpers.ACCEPTANCE_TITLES):
        line = helpers.ACCEPTANCE_RESULTS.get(n)
        if line is None:
            line = f"[FAIL] criterion {n:2d} {helpers.ACCEPTANCE_TITLES[n]}: did not report (error or not run)"
        terminalreporter.write_line(line)
