import pytest

from ergotwin.protocol import run_session


@pytest.fixture(scope="session")
def default_recording():
    """One full default session, shared by every test that only reads it."""
    return run_session(seed=0)
