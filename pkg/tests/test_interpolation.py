import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autoclean.core import EpochsTensor
from autoclean.errors import GeometryError, RepairError
from autoclean.interpolation import (
    angular_diameter_deg,
    augment,
    build_operator,
    interpolate_sensors,
)

from conftest import random_epochs, spiral_layout


def harmonic_field(positions: np.ndarray) -> np.ndarray:
    """Smooth degree-2 zonal harmonic, evaluated per sensor."""
    z = positions[:, 2]
    return 1.5 * z ** 2 - 0.5


class TestOperator:
    def test_rows_sum_to_one(self, layout32):
        op = build_operator(layout32, range(4, 32), range(4))
        assert np.allclose(op.weights.sum(axis=1), 1.0, atol=1e-9)

    def test_constant_field_exact(self, layout32):
        op = build_operator(layout32, range(4, 32), range(4))
        pred = op.apply(np.full((28, 1), 7.5))
        assert np.allclose(pred, 7.5, atol=1e-8)

    def test_named_ids(self, layout8):
        op = build_operator(layout8, [0, 1, 2, 3], [4, 5])
        assert op.source_ids == tuple(layout8.names[:4])
        assert op.target_ids == tuple(layout8.names[4:6])
        assert op.weights.shape == (2, 4)

    def test_too_few_sources(self, layout8):
        with pytest.raises(GeometryError):
            build_operator(layout8, [0, 1, 2], [3])

    def test_harmonic_reconstruction(self, layout32):
        field = harmonic_field(layout32.positions)
        held_out = [3, 11, 19]
        sources = [j for j in range(32) if j not in held_out]
        op = build_operator(layout32, sources, held_out)
        pred = op.apply(field[sources][:, None])[:, 0]
        rel = np.abs(pred - field[held_out]) / np.abs(field).max()
        assert rel.max() < 0.05

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_linearity(self, seed):
        rng = np.random.default_rng(seed)
        layout = spiral_layout(10)
        op = build_operator(layout, range(6), range(6, 10))
        x = rng.standard_normal((6, 3))
        y = rng.standard_normal((6, 3))
        a, b = rng.standard_normal(2)
        assert np.allclose(op.apply(a * x + b * y),
                           a * op.apply(x) + b * op.apply(y),
                           rtol=1e-9, atol=1e-9)


class TestAngularDiameter:
    def test_degenerate_cases(self, layout8):
        assert angular_diameter_deg(layout8, []) == 0.0
        assert angular_diameter_deg(layout8, [3]) == 0.0

    def test_antipodal_pair(self):
        layout = spiral_layout(8)
        pos = np.array(layout.positions)
        pos[0] = [0.0, 0.0, 1.0]
        pos[1] = [0.0, 0.0, -1.0]
        from autoclean.core import SensorLayout
        layout2 = SensorLayout(names=layout.names, positions=pos)
        assert angular_diameter_deg(layout2, [0, 1]) == pytest.approx(180.0)

    def test_monotone_under_superset(self, layout32):
        d_small = angular_diameter_deg(layout32, [0, 1, 2])
        d_big = angular_diameter_deg(layout32, [0, 1, 2, 20])
        assert d_big >= d_small


class TestInterpolateSensors:
    def test_all_good_returns_same_object(self, rng, layout8):
        ep = random_epochs(rng, q=8)
        mask = np.zeros((ep.n_trials, 8), dtype=bool)
        assert interpolate_sensors(ep, layout8, mask) is ep

    def test_untouched_cells_bit_identical(self, rng, layout8):
        ep = random_epochs(rng, n=4, q=8)
        mask = np.zeros((4, 8), dtype=bool)
        mask[1, 2] = True
        mask[3, [0, 5]] = True
        out = interpolate_sensors(ep, layout8, mask)
        assert np.array_equal(out.data[~mask], ep.data[~mask])
        assert not np.array_equal(out.data[1, 2], ep.data[1, 2])

    def test_harmonic_repair_accuracy(self, layout32):
        field = harmonic_field(layout32.positions)
        ramp = np.linspace(0.5, 1.5, 6)
        data = np.tile((field[:, None] * ramp)[None], (2, 1, 1))
        ep = EpochsTensor(data=data, sfreq_hz=1.0)
        mask = np.zeros((2, 32), dtype=bool)
        mask[0, [5, 17]] = True
        out = interpolate_sensors(ep, layout32, mask)
        rel = np.abs(out.data[0, [5, 17]] - ep.data[0, [5, 17]])
        assert rel.max() / np.abs(field).max() < 0.05

    def test_too_few_good_sensors(self, rng, layout8):
        ep = random_epochs(rng, n=2, q=8)
        mask = np.zeros((2, 8), dtype=bool)
        mask[0, :5] = True
        with pytest.raises(RepairError):
            interpolate_sensors(ep, layout8, mask)

    def test_bad_mask_shape(self, rng, layout8):
        ep = random_epochs(rng, q=8)
        with pytest.raises(RepairError):
            interpolate_sensors(ep, layout8, np.zeros((2, 2), dtype=bool))

    def test_prediction_ignores_flagged_values(self, rng, layout8):
        ep = random_epochs(rng, n=2, q=8)
        spiked = np.array(ep.data)
        spiked[0, 3] += 1e9
        ep2 = EpochsTensor(data=spiked, sfreq_hz=1.0)
        mask = np.zeros((2, 8), dtype=bool)
        mask[0, 3] = True
        out1 = interpolate_sensors(ep, layout8, mask)
        out2 = interpolate_sensors(ep2, layout8, mask)
        assert np.array_equal(out1.data, out2.data)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        layout = spiral_layout(8)
        ep = random_epochs(rng, n=3, q=8, t=4)
        mask = np.zeros((3, 8), dtype=bool)
        for i in range(3):
            flagged = rng.choice(8, size=rng.integers(0, 4), replace=False)
            mask[i, flagged] = True
        out1 = interpolate_sensors(ep, layout, mask)
        out2 = interpolate_sensors(out1, layout, mask)
        assert np.allclose(out1.data, out2.data, rtol=1e-7, atol=1e-9)


class TestAugment:
    def test_doubles_trials_and_flags(self, rng, layout8):
        ep = random_epochs(rng, n=5, q=8)
        aug = augment(ep, layout8)
        assert aug.n_trials == 10
        assert np.array_equal(aug.data[:5], ep.data)
        assert not aug.origin_flags[:5].any()
        assert aug.origin_flags[5:].all()

    def test_min_sensor_count(self, rng):
        layout = spiral_layout(4)
        ep = random_epochs(rng, q=4)
        with pytest.raises(GeometryError):
            augment(ep, layout)

    def test_augmented_sensor_ignores_own_data(self, rng, layout8):
        ep = random_epochs(rng, n=2, q=8)
        spiked = np.array(ep.data)
        spiked[:, 3, :] += 1e6
        ep2 = EpochsTensor(data=spiked, sfreq_hz=1.0)
        a1 = augment(ep, layout8)
        a2 = augment(ep2, layout8)
        assert np.array_equal(a1.data[2:, 3, :], a2.data[2:, 3, :])

    def test_harmonic_copies_close_to_original(self, layout32):
        field = harmonic_field(layout32.positions)
        data = np.tile(field[None, :, None], (1, 1, 3))
        ep = EpochsTensor(data=data, sfreq_hz=1.0)
        aug = augment(ep, layout32)
        err = np.abs(aug.data[1] - data[0]).max()
        assert err / np.abs(field).max() < 0.1
