import pytest

from maltsev import catalog


@pytest.fixture(scope="session")
def bundled():
    """name -> (algebra, maltsev circuit) for every bundled algebra."""
    return {
        name: (catalog.load(name), catalog.maltsev_circuit(name)) for name in catalog.names()
    }
