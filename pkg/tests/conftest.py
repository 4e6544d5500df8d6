import numpy as np
import pytest

from ringpose.dataset import StudyConfig, generate_study
from ringpose.hand import default_hand
from ringpose.ik import default_pose_table
from ringpose.simulate import RingMount, SensorRig


@pytest.fixture(scope="session")
def hand():
    return default_hand()


@pytest.fixture(scope="session")
def pose_table():
    return default_pose_table()


@pytest.fixture(scope="session")
def rig():
    return SensorRig()


@pytest.fixture(scope="session")
def mount():
    return RingMount()


@pytest.fixture(scope="session")
def small_study():
    """Two simulated users with the full session layout; shared read-only."""
    users = generate_study(StudyConfig(users=2, seed=42))
    return {d.user.user_id: d.sessions for d in users}


@pytest.fixture(scope="session")
def small_study_users():
    users = generate_study(StudyConfig(users=2, seed=42))
    return users


def rng(*key):
    return np.random.default_rng(list(key))
