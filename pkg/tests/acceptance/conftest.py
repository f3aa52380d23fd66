"""Acceptance-size runs: full sample counts and exhaustive depths."""

from pathlib import Path

import pytest


def pytest_collection_modifyitems(items):
    """Mark every test in this package `slow`.

    The hook is registered session-wide, so it scopes itself to files under
    this directory; otherwise `-m "not slow"` would deselect the whole suite.
    """
    package_dir = Path(__file__).parent
    for item in items:
        if package_dir in item.path.parents:
            item.add_marker(pytest.mark.slow)
