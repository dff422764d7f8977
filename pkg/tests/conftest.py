"""Make shared test fixtures (benchmark_fixture, demo helpers) importable."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
