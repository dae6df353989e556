import numpy as np
import pytest

from autoclean.methods import (
    evoked_autoreject_global,
    evoked_no_rejection,
    evoked_sns,
    standard_methods,
)
from autoclean.synth import SimConfig, simulate


@pytest.fixture(scope="module")
def dataset():
    return simulate(SimConfig(seed=0, n_trials=12, n_sensors=16,
                              n_times=64, p_cell_artifact=0.02))


class TestRegistry:
    def test_known_names_resolve(self):
        pairs = standard_methods(["sns", "faster", "ransac",
                                  "autoreject-global",
                                  "autoreject-local"], seed=0)
        assert [name for name, _ in pairs] == [
            "sns", "faster", "ransac", "autoreject-global",
            "autoreject-local",
        ]

    def test_control_excluded(self):
        assert standard_methods(["no-rejection"]) == []

    def test_unknown_name(self):
        with pytest.raises(KeyError):
            standard_methods(["mystery"])


class TestEstimators:
    def test_no_rejection_is_plain_mean(self, dataset):
        epochs, layout, _ = dataset
        ev = evoked_no_rejection(epochs, layout)
        assert np.allclose(ev.values, epochs.data.mean(axis=0))
        assert ev.n_contributing == epochs.n_trials

    def test_global_rejection_drops_corrupted_trials(self, dataset):
        epochs, layout, truth = dataset
        n_corrupted_trials = int(truth.corruption_mask.any(axis=1).sum())
        ev = evoked_autoreject_global(epochs, layout, seed=0)
        assert ev.n_contributing == epochs.n_trials - n_corrupted_trials

    def test_sns_preserves_shape(self, dataset):
        epochs, layout, _ = dataset
        ev = evoked_sns(epochs, layout)
        assert ev.values.shape == (epochs.n_sensors, epochs.n_times)
