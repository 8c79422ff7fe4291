import os
import json
import pytest

from relay_secrecy.af import AfBeamformer
from relay_secrecy.channel import derive_af, load_channel, sample_channel
from relay_secrecy.conic import ConicSolver
from relay_secrecy.df import DfBeamformer
from relay_secrecy.models.beam_models import AfAlgorithmConfig, DfAlgorithmConfig

CORPUS = os.path.join(os.path.dirname(__file__), 'corpus')


def corpus_file(name: str) -> str:
    return os.path.join(CORPUS, name)


@pytest.fixture
def m1_unit():
    return load_channel(corpus_file('m1_unit.json'))


@pytest.fixture
def m1_strong():
    return load_channel(corpus_file('m1_strong.json'))


@pytest.fixture
def symmetric():
    return load_channel(corpus_file('m2_symmetric.json'))


@pytest.fixture
def golden():
    with open(corpus_file('m1_strong_golden.json'), 'r', encoding='UTF-8') as f:
        return json.load(f)


@pytest.fixture
def ten_relay_channel():
    """M = 10, sigma_g = 10, sigma_h = sigma_z = 2, Nm = N0 = 1."""
    ch = sample_channel(seed=2024, M=10, sigma_g=10.0, sigma_h=2.0, sigma_z=2.0)
    return ch, derive_af(ch)


@pytest.fixture
def solver():
    return ConicSolver()


@pytest.fixture
def af_config():
    return AfAlgorithmConfig(N=100, bisection_tol=1e-6, randomization_samples=200)


@pytest.fixture
def af_beamformer(af_config):
    with AfBeamformer(config=af_config) as beamformer:
        yield beamformer


@pytest.fixture
def df_beamformer():
    with DfBeamformer(config=DfAlgorithmConfig(bisection_tol=1e-7, randomization_samples=200)) as beamformer:
        yield beamformer


@pytest.fixture
def corpus_path():
    return corpus_file
