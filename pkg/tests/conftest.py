import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nvrepeater import spinmech


@pytest.fixture(scope="session")
def rates():
    return spinmech.fig4_rates()
