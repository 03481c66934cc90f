import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fabricflow import Runtime, load_manifest, load_topology


@pytest.fixture
def topology():
    return load_topology()


@pytest.fixture
def manifest():
    return load_manifest()


@pytest.fixture
def runtime():
    return Runtime(layer="tf")


@pytest.fixture
def hsa_runtime():
    return Runtime(layer="hsa")
