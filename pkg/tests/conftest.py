import numpy as np
import pytest

from freebs import GainMatrix, VirtualQueueState, reference_config


@pytest.fixture
def cfg2():
    return reference_config(2)


@pytest.fixture
def two_user_slot():
    """N=2 worked instance: gains (0.5, 0.1), link 1->2 gain 0.02, Y=(0.5, 2), Z=0.3."""
    gains = GainMatrix(np.array([0.5, 0.1]), np.array([[1.0, 0.02], [1.0, 1.0]]))
    queues = VirtualQueueState(np.array([0.5, 2.0]), 0.3)
    return gains, queues
