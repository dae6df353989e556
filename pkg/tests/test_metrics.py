import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from autoclean.core import EpochsTensor
from autoclean.errors import ContractError
from autoclean.metrics import (
    EvokedMatrix,
    eval_l2,
    eval_linf,
    peak_to_peak,
    trial_mean,
    trial_median,
)

from conftest import random_epochs

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def epochs_strategy(max_n=6, max_q=5, max_t=8):
    shapes = st.tuples(st.integers(1, max_n), st.integers(2, max_q),
                       st.integers(2, max_t))
    return shapes.flatmap(
        lambda s: hnp.arrays(np.float64, s, elements=finite)
    ).map(lambda d: EpochsTensor(data=d, sfreq_hz=100.0))


class TestPeakToPeak:
    def test_known_values(self):
        data = np.zeros((2, 2, 4))
        data[0, 0] = [0.0, 3.0, -1.0, 2.0]
        data[0, 1] = [5.0, 5.0, 5.0, 5.0]
        data[1, 0] = [-2.0, -7.0, 0.0, 1.0]
        data[1, 1] = [1.0, 2.0, 3.0, 4.0]
        amp = peak_to_peak(EpochsTensor(data=data, sfreq_hz=1.0))
        assert np.array_equal(amp.values, [[4.0, 0.0], [8.0, 3.0]])

    @settings(max_examples=100, deadline=None)
    @given(epochs_strategy())
    def test_nonnegative_and_shape(self, epochs):
        amp = peak_to_peak(epochs)
        assert amp.values.shape == (epochs.n_trials, epochs.n_sensors)
        assert np.all(amp.values >= 0)

    @settings(max_examples=100, deadline=None)
    @given(epochs_strategy(), finite)
    def test_offset_invariant(self, epochs, offset):
        shifted = EpochsTensor(data=epochs.data + offset, sfreq_hz=1.0)
        assert np.allclose(peak_to_peak(epochs).values,
                           peak_to_peak(shifted).values,
                           rtol=1e-9, atol=1e-6)

    @settings(max_examples=100, deadline=None)
    @given(epochs_strategy(), st.floats(0.0, 100.0, allow_nan=False))
    def test_scale_equivariant(self, epochs, scale):
        scaled = EpochsTensor(data=epochs.data * scale + 1.0, sfreq_hz=1.0)
        assert np.allclose(peak_to_peak(scaled).values,
                           scale * peak_to_peak(epochs).values,
                           rtol=1e-9, atol=1e-9)


class TestTrialAverages:
    def test_mean_of_empty_is_zero(self, rng):
        ep = random_epochs(rng)
        ev = trial_mean(ep, [])
        assert ev.n_contributing == 0
        assert not ev.values.any()

    def test_median_of_empty_raises(self, rng):
        with pytest.raises(ContractError):
            trial_median(random_epochs(rng), [])

    def test_duplicate_indices_rejected(self, rng):
        with pytest.raises(ContractError):
            trial_mean(random_epochs(rng), [0, 0])

    def test_out_of_range_rejected(self, rng):
        ep = random_epochs(rng, n=3)
        with pytest.raises(IndexError):
            trial_mean(ep, [3])
        with pytest.raises(IndexError):
            trial_median(ep, [-1])

    def test_mean_matches_numpy(self, rng):
        ep = random_epochs(rng, n=7)
        ev = trial_mean(ep, [1, 3, 4])
        assert np.allclose(ev.values, ep.data[[1, 3, 4]].mean(axis=0))
        assert ev.n_contributing == 3

    def test_median_even_count_midpoint(self):
        data = np.zeros((2, 2, 2))
        data[0] = 1.0
        data[1] = 3.0
        ep = EpochsTensor(data=data, sfreq_hz=1.0)
        assert np.allclose(trial_median(ep, [0, 1]).values, 2.0)

    def test_median_robust_to_one_outlier(self, rng):
        ep = random_epochs(rng, n=5)
        spiked = np.array(ep.data)
        spiked[2] += 1e6
        ep2 = EpochsTensor(data=spiked, sfreq_hz=1.0)
        med = trial_median(ep2, range(5)).values
        clean_med = trial_median(ep, range(5)).values
        # the corrupted trial only shifts the median to a neighboring
        # order statistic, never to the outlier itself
        assert np.abs(med).max() < 100.0
        assert np.abs(med - clean_med).max() < 10.0

    @settings(max_examples=100, deadline=None)
    @given(epochs_strategy())
    def test_single_trial_mean_is_identity(self, epochs):
        ev = trial_mean(epochs, [0])
        assert np.array_equal(ev.values, epochs.data[0])
        assert np.array_equal(trial_median(epochs, [0]).values,
                              epochs.data[0])

    @settings(max_examples=100, deadline=None)
    @given(epochs_strategy(max_n=5))
    def test_mean_median_bounded_by_extremes(self, epochs):
        idx = list(range(epochs.n_trials))
        lo = epochs.data.min(axis=0)
        hi = epochs.data.max(axis=0)
        for ev in (trial_mean(epochs, idx), trial_median(epochs, idx)):
            assert np.all(ev.values >= lo - 1e-9)
            assert np.all(ev.values <= hi + 1e-9)


class TestNorms:
    def test_known_values(self):
        a = EvokedMatrix(values=[[0.0, 0.0], [0.0, 0.0]], n_contributing=1)
        b = EvokedMatrix(values=[[3.0, 0.0], [0.0, 4.0]], n_contributing=1)
        assert eval_linf(a, b) == 4.0
        assert eval_l2(a, b) == 5.0

    def test_shape_mismatch(self):
        a = EvokedMatrix(values=np.zeros((2, 3)), n_contributing=1)
        b = EvokedMatrix(values=np.zeros((3, 2)), n_contributing=1)
        with pytest.raises(ContractError):
            eval_linf(a, b)
        with pytest.raises(ContractError):
            eval_l2(a, b)

    @settings(max_examples=100, deadline=None)
    @given(hnp.arrays(np.float64, (3, 4), elements=finite),
           hnp.arrays(np.float64, (3, 4), elements=finite))
    def test_norm_ordering(self, x, y):
        a = EvokedMatrix(values=x, n_contributing=1)
        b = EvokedMatrix(values=y, n_contributing=1)
        linf = eval_linf(a, b)
        l2 = eval_l2(a, b)
        assert linf <= l2 + 1e-9
        assert l2 <= np.sqrt(x.size) * linf + 1e-9

    @settings(max_examples=100, deadline=None)
    @given(hnp.arrays(np.float64, (2, 3), elements=finite))
    def test_identity_and_symmetry(self, x):
        a = EvokedMatrix(values=x, n_contributing=1)
        b = EvokedMatrix(values=-x, n_contributing=1)
        assert eval_linf(a, a) == 0.0
        assert eval_l2(a, a) == 0.0
        assert eval_l2(a, b) == eval_l2(b, a)
        assert eval_linf(a, b) == eval_linf(b, a)
