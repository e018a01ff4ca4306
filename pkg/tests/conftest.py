import pytest

from winpred.matchdata import SynthConfig, synthesize


@pytest.fixture(scope="session")
def synth_small():
    """60 matches around a 30-minute mean: a few fall below the 20-min mark."""
    return synthesize(SynthConfig(n_matches=60, mean_duration_minutes=30.0, seed=7))


@pytest.fixture(scope="session")
def synth_2000():
    return synthesize(SynthConfig(n_matches=2000, kill_signal_strength=0.5, seed=21))


@pytest.fixture(scope="session")
def synth_5000():
    return synthesize(SynthConfig(n_matches=5000, kill_signal_strength=0.5, seed=13))


@pytest.fixture(scope="session")
def null_5000():
    return synthesize(SynthConfig(n_matches=5000, kill_signal_strength=0.0, seed=99))
