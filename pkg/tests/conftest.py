"""Shared fixtures for the unit tests."""

import os
from unittest.mock import patch

import pytest
from hypothesis import strategies as st

from src.bitreg import BitString
from src.series import Params

TAKAGI_VARS = (
    "TAKAGI_GAMMA",
    "TAKAGI_DEPTH",
    "TAKAGI_TRUNCATION",
    "TAKAGI_SAMPLES",
    "TAKAGI_SEED",
    "TAKAGI_BINS",
    "TAKAGI_THREADS",
    "TAKAGI_LOG_LEVEL",
)


def registers(depth: int) -> st.SearchStrategy[BitString]:
    """Every register of one depth, uniformly over its words."""
    return st.integers(min_value=0, max_value=(1 << depth) - 1).map(
        lambda w: BitString(w, depth)
    )


gammas = st.floats(min_value=0.52, max_value=0.95)


@pytest.fixture
def params() -> Params:
    return Params(gamma=0.6)


@pytest.fixture
def clean_env():
    """Run with no TAKAGI_* variables set."""
    kept = {k: v for k, v in os.environ.items() if k not in TAKAGI_VARS}
    with patch.dict(os.environ, kept, clear=True):
        yield
