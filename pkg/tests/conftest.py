import pytest

import _runs


@pytest.fixture(scope="session")
def standard():
    """(config, trajectory, field cache) of the standard T^1 run."""
    return _runs.standard_run()


@pytest.fixture(scope="session")
def concave():
    """(config, trajectory, field cache) of the concave-log transient run."""
    return _runs.concave_run()


@pytest.fixture(scope="session")
def constant_traj():
    """Space-constant trajectory with a closed-form solution."""
    return _runs.constant_run()
