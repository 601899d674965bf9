from __future__ import annotations

import os
import sys
from pathlib import Path

PYTHON_ROOT = Path(__file__).resolve().parents[2]
if str(PYTHON_ROOT) not in sys.path:
    sys.path.insert(0, str(PYTHON_ROOT))

os.environ.setdefault("PSEUDOCONE_THREADS", "1")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long Monte-Carlo and enumeration runs")
