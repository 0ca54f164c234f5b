import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("qp", max_examples=40, deadline=None)
settings.load_profile("qp")

from qproject import QpInstance  # noqa: E402


@pytest.fixture
def box1d():
    """``x^2 - 2x`` on ``[-1, 1]``."""
    return QpInstance(Q=np.array([[2.0]]), c=np.array([-2.0]), A=np.array([[1.0], [-1.0]]), b=np.array([1.0, 1.0]))


@pytest.fixture
def box2d():
    """``1/2 |x|^2 - x_1`` on the unit box."""
    A = np.vstack([np.eye(2), -np.eye(2)])
    return QpInstance(Q=np.eye(2), c=np.array([-1.0, 0.0]), A=A, b=np.ones(4))
