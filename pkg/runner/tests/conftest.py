import pytest

from shim_client import ShimClient


@pytest.fixture
def shim():
    client = ShimClient()
    yield client
    client.close()
