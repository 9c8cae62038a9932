import copy
from pathlib import Path

import pytest

from neuro.lif import NeuronParams
from utils.config import DEFAULT_CONFIG

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def params():
    return NeuronParams()


@pytest.fixture
def config():
    return copy.deepcopy(DEFAULT_CONFIG)


@pytest.fixture
def root():
    return ROOT
