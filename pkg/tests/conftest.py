import numpy as np
import pytest

from autoclean.core import EpochsTensor, SensorLayout
from autoclean.synth import fibonacci_sphere


def spiral_layout(q: int) -> SensorLayout:
    return SensorLayout(
        names=[f"S{j:03d}" for j in range(q)],
        positions=fibonacci_sphere(q),
    )


def random_epochs(rng, n=6, q=5, t=8, sfreq=100.0) -> EpochsTensor:
    return EpochsTensor(
        data=rng.standard_normal((n, q, t)), sfreq_hz=sfreq
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def layout8():
    return spiral_layout(8)


@pytest.fixture
def layout32():
    return spiral_layout(32)
