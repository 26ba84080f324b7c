import re

import pytest


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Emit the acceptance FAIL line; the tests themselves print PASS."""
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and report.failed:
        m = re.match(r"test_criterion_(\d+)_(\w+)", item.name)
        if m:
            print(f"\nACCEPTANCE {m[1]} {m[2].replace('_', ' ')}: FAIL")
