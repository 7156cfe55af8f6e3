import numpy as np
import pytest

from config.logging import configure_logging
from dataeval.synth import SynthSpec, synth_dataset


@pytest.fixture(scope="session", autouse=True)
def quiet_logging():
    configure_logging("WARNING")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tiny_manifest(tmp_path_factory):
    """4 subjects × 3 classes (neutral, anger, contempt) × 2 frames, written once per session"""
    out = tmp_path_factory.mktemp("tiny")
    _, path = synth_dataset(SynthSpec(subjects=4, classes=3, per=2, noise=0.01), out, seed=3)
    return path

