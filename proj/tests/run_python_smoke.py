"""Runs the Python smoke tests when the installed package and pytest are available."""
import importlib.util
import sys

SKIP = 77

if importlib.util.find_spec("gcog") is None or importlib.util.find_spec("pytest") is None:
    print("gcog package or pytest not installed; skipping")
    sys.exit(SKIP)

import pytest

sys.exit(pytest.main(["-q", "-p", "no:cacheprovider", *sys.argv[1:]]))
