"""
tests/test_predops.py - ConvLens

Ensembles, suavizado de etiquetas, activaciones, correlación de filtros
y actualizaciones de pesos.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from models.tensor import FilterTensor, PredictionSet, SnapshotSeries
from services import predops_service
from services.errors import ConvLensError, InvariantViolation

KINKS = {
    "relu": [0.0], "relu_minus": [-1.0], "s2relu": [-2.0, 2.0], "lrelu": [0.0],
    "prelu": [0.0], "elu": [0.0], "sign": [0.0], "heaviside": [0.0],
}


def stochastic_rows(rng, n, k):
    rows = rng.random((n, k)) + 1e-3
    return PredictionSet(rows / rows.sum(axis=1, keepdims=True))


def shifted_oracle(b: np.ndarray, dx: int, dy: int) -> np.ndarray:
    out = np.zeros_like(b)
    width, height, _ = b.shape
    for x in range(width):
        for y in range(height):
            if 0 <= x + dx < width and 0 <= y + dy < height:
                out[x + dx, y + dy, :] = b[x, y, :]
    return out


def correlation_oracle(a: np.ndarray, b: np.ndarray, k: int) -> float:
    values = [
        float(np.sum(a * shifted_oracle(b, dx, dy)))
        for dx in range(-k, k + 1) for dy in range(-k, k + 1) if (dx, dy) != (0, 0)
    ]
    return max(values) / (np.linalg.norm(a) * np.linalg.norm(b))


class TestEnsembles:

    def test_single_member(self, rng):
        member = stochastic_rows(rng, 4, 3)
        assert_allclose(predops_service.ensemble_average([member]).rows, member.rows)

    def test_two_members(self):
        result = predops_service.ensemble_average([PredictionSet([[1, 0]]), PredictionSet([[0, 1]])])
        assert_allclose(result.rows, [[0.5, 0.5]])

    def test_rows_stay_stochastic(self, rng):
        members = [stochastic_rows(rng, 50, 7) for _ in range(3)]
        result = predops_service.ensemble_average(members)
        assert_allclose(result.rows.sum(axis=1), 1.0, atol=1e-6)

    def test_shape_mismatch(self, rng):
        with pytest.raises(ConvLensError):
            predops_service.ensemble_average([stochastic_rows(rng, 2, 3), stochastic_rows(rng, 3, 3)])

    def test_empty(self):
        with pytest.raises(ConvLensError):
            predops_service.ensemble_average([])

    def test_non_stochastic_rows_rejected(self):
        with pytest.raises(ConvLensError):
            PredictionSet([[0.7, 0.7]])


class TestLabelSmoothing:

    def test_half(self):
        result = predops_service.smooth_labels(PredictionSet([[1, 0]]), PredictionSet([[0.6, 0.4]]), 0.5)
        assert_allclose(result.rows, [[0.8, 0.2]])

    @pytest.mark.parametrize("alpha", [0.0, 1.0])
    def test_extremes(self, rng, alpha):
        targets = PredictionSet(np.eye(3))
        ensemble = stochastic_rows(rng, 3, 3)
        result = predops_service.smooth_labels(targets, ensemble, alpha)
        expected = targets.rows if alpha == 1.0 else ensemble.rows
        assert_allclose(result.rows, expected)

    def test_alpha_out_of_range(self):
        with pytest.raises(ConvLensError):
            predops_service.smooth_labels(PredictionSet([[1, 0]]), PredictionSet([[1, 0]]), 1.5)

    @given(st.floats(0, 1), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_rows_stay_stochastic(self, alpha, seed):
        rng = np.random.default_rng(seed)
        result = predops_service.smooth_labels(stochastic_rows(rng, 5, 4), stochastic_rows(rng, 5, 4), alpha)
        assert_allclose(result.rows.sum(axis=1), 1.0, atol=1e-6)


class TestActivations:

    def test_anchor_points(self):
        assert predops_service.activation("logistic_minus", 0).value == 0.0
        assert predops_service.activation("relu_minus", -5).value == -1.0
        assert predops_service.activation("elu", 0).value == 0.0

    @pytest.mark.parametrize("x, expected", [(4, 3), (-4, -3), (1, 1), (0, 0)])
    def test_s2relu(self, x, expected):
        assert predops_service.activation("s2relu", x).value == pytest.approx(expected)

    def test_softplus_derivative_at_zero(self):
        result = predops_service.activation("softplus", 0)
        assert result.derivative == pytest.approx(0.5)
        h = 1e-6
        numeric = (predops_service.activation("softplus", h).value
                   - predops_service.activation("softplus", -h).value) / (2 * h)
        assert numeric == pytest.approx(result.derivative, abs=1e-6)

    def test_right_hand_subgradient(self):
        assert predops_service.activation("relu", 0).derivative == 1.0
        assert predops_service.activation("s2relu", 2).derivative == 0.5
        assert predops_service.activation("s2relu", -2).derivative == 1.0

    def test_alpha_parameter(self):
        assert predops_service.activation("lrelu", -2, alpha=0.25).value == pytest.approx(-0.5)
        assert predops_service.activation("lrelu", -2).value == pytest.approx(-0.02)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
    def test_alpha_out_of_range(self, alpha):
        with pytest.raises(ConvLensError):
            predops_service.activation("elu", -1, alpha=alpha)

    def test_unknown_name(self):
        with pytest.raises(ConvLensError, match="desconocida"):
            predops_service.activation("swish", 0)

    @pytest.mark.parametrize("name", predops_service.ACTIVATION_NAMES)
    def test_derivative_matches_finite_differences(self, name, rng):
        h = 1e-6
        checked = 0
        for x in rng.uniform(-5, 5, size=150):
            if any(abs(x - kink) < 1e-3 for kink in KINKS.get(name, [])):
                continue
            numeric = (predops_service.activation(name, x + h, 0.3).value
                       - predops_service.activation(name, x - h, 0.3).value) / (2 * h)
            assert predops_service.activation(name, x, 0.3).derivative == pytest.approx(numeric, abs=1e-5)
            checked += 1
        assert checked >= 100

    def test_ranges_by_sampling(self, rng):
        xs = rng.uniform(-50, 50, size=500)
        values = {name: np.array([predops_service.activation(name, x, 0.3).value for x in xs])
                  for name in ("logistic", "logistic_minus", "tanh", "softsign", "relu", "elu", "s2relu")}
        assert np.all((values["logistic"] >= 0) & (values["logistic"] <= 1))
        assert np.all(np.abs(values["logistic_minus"]) <= 0.5)
        assert np.all(np.abs(values["tanh"]) <= 1)
        assert np.all(np.abs(values["softsign"]) < 1)
        assert np.all(values["relu"] >= 0)
        assert np.all(values["elu"] >= -0.3)
        assert values["s2relu"].min() < -10 and values["s2relu"].max() > 10

    def test_softmax(self):
        out, derivative = predops_service.softmax([1000.0, 1000.0])
        assert_allclose(out, [0.5, 0.5])
        assert_allclose(derivative, [0.25, 0.25])

    def test_maxout(self):
        value, derivative = predops_service.maxout([1.0, 3.0, 3.0])
        assert value == 3.0
        assert_allclose(derivative, [0.0, 1.0, 0.0])

    def test_catalog(self):
        catalog = {info.name: info for info in predops_service.activation_catalog()}
        assert catalog["relu"].bound_activation == "half-sided"
        assert catalog["elu"].bound_activation == "no"
        assert catalog["tanh"].negative_activation is True
        assert catalog["logistic"].vanishing_gradient is True
        assert set(predops_service.ACTIVATION_NAMES) <= set(catalog)

    def test_elu_range_has_a_lower_bound(self, rng):
        catalog = {info.name: info for info in predops_service.activation_catalog()}
        assert catalog["elu"].value_range == "(-alpha, +inf)"
        lowest = min(predops_service.activation("elu", x, 0.3).value for x in rng.uniform(-8, 0, size=200))
        assert -0.3 < lowest < -0.29


class TestTranslationCorrelation:

    def test_single_pixel_filters(self):
        a = FilterTensor([[[1.0]]])
        b = FilterTensor([[[2.0]]])
        assert predops_service.k_translation_correlation(a, b, 3) == 0.0

    def test_shifted_spike(self):
        a = np.zeros((3, 3, 1))
        b = np.zeros((3, 3, 1))
        a[0, 1, 0] = 1.0
        b[0, 0, 0] = 1.0
        value = predops_service.k_translation_correlation(FilterTensor(a), FilterTensor(b), 1)
        assert value == pytest.approx(1.0)

    def test_orthogonal_under_all_shifts(self):
        a = np.zeros((2, 2, 2))
        b = np.zeros((2, 2, 2))
        a[:, :, 0] = 1.0
        b[:, :, 1] = 1.0
        assert predops_service.k_translation_correlation(FilterTensor(a), FilterTensor(b), 1) == 0.0

    def test_zero_norm(self):
        with pytest.raises(ConvLensError, match="norma 0"):
            predops_service.k_translation_correlation(FilterTensor(np.zeros((2, 2))),
                                                      FilterTensor(np.ones((2, 2))), 1)

    def test_dimension_mismatch(self):
        with pytest.raises(ConvLensError):
            predops_service.k_translation_correlation(FilterTensor(np.ones((2, 2))),
                                                      FilterTensor(np.ones((3, 3))), 1)

    @given(st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 3)).flatmap(
        lambda dims: st.tuples(
            arrays(np.float64, dims, elements=st.floats(-1, 1, allow_subnormal=False)),
            arrays(np.float64, dims, elements=st.floats(-1, 1, allow_subnormal=False)),
        )),
        st.integers(1, 3))
    @settings(max_examples=1000, deadline=None)
    def test_bounded_and_matches_loop_oracle(self, pair, k):
        a, b = pair
        if np.linalg.norm(a) < 1e-3 or np.linalg.norm(b) < 1e-3:
            return
        value = predops_service.k_translation_correlation(FilterTensor(a), FilterTensor(b), k)
        assert abs(value) <= 1.0 + predops_service.CORRELATION_TOLERANCE
        assert value == pytest.approx(correlation_oracle(a, b, k), abs=1e-12)

    def test_out_of_range_ratio_is_reported(self, monkeypatch):
        spike = np.zeros((3, 3, 1))
        spike[1, 1, 0] = 1.0
        moved = np.zeros((3, 3, 1))
        moved[1, 2, 0] = 1.0
        monkeypatch.setattr(FilterTensor, "norm", lambda self: 0.5)
        with pytest.raises(InvariantViolation, match="fuera de"):
            predops_service.k_translation_correlation(FilterTensor(spike), FilterTensor(moved), 1)

    def test_exact_shift_is_not_clipped(self):
        spike = np.zeros((3, 3, 1))
        spike[0, 0, 0] = 2.0
        moved = np.zeros((3, 3, 1))
        moved[1, 1, 0] = 2.0
        assert predops_service.k_translation_correlation(FilterTensor(moved), FilterTensor(spike), 1) == 1.0

    def test_layer_average(self):
        spike = np.zeros((3, 3, 1))
        spike[1, 1, 0] = 1.0
        moved = np.zeros((3, 3, 1))
        moved[1, 2, 0] = 1.0
        layer = [FilterTensor(spike), FilterTensor(moved)]
        assert predops_service.avg_max_translation_correlation(layer, 1) == pytest.approx(1.0)

    def test_layer_needs_two_filters(self):
        with pytest.raises(ConvLensError):
            predops_service.avg_max_translation_correlation([FilterTensor(np.ones((2, 2)))], 1)


class TestWeightUpdates:

    def test_identical_snapshots(self):
        series = SnapshotSeries([{"conv1": [1.0, 2.0]}, {"conv1": [1.0, 2.0]}])
        stat = predops_service.weight_update_stats(series)[0]
        assert (stat.mean, stat.max, stat.sum) == (0.0, 0.0, 0.0)

    def test_single_change(self):
        before = np.zeros(10)
        after = before.copy()
        after[3] = -0.5
        stat = predops_service.weight_update_stats(SnapshotSeries([{"fc": before}, {"fc": after}]))[0]
        assert stat.mean == pytest.approx(0.05)
        assert stat.max == pytest.approx(0.5)
        assert stat.sum == pytest.approx(0.5)

    def test_scaling_doubles_statistics(self, rng):
        base = rng.normal(size=20)
        delta = rng.normal(size=20)
        once = predops_service.weight_update_stats(SnapshotSeries([{"w": base}, {"w": base + delta}]))[0]
        twice = predops_service.weight_update_stats(SnapshotSeries([{"w": base}, {"w": base + 2 * delta}]))[0]
        assert twice.mean == pytest.approx(2 * once.mean)
        assert twice.max == pytest.approx(2 * once.max)
        assert twice.sum == pytest.approx(2 * once.sum)

    def test_one_row_per_layer_and_epoch_pair(self):
        epochs = [{"a": [float(e)], "b": [0.0, float(e)]} for e in range(4)]
        stats = predops_service.weight_update_stats(SnapshotSeries(epochs))
        assert len(stats) == 6
        assert [(s.layer, s.from_epoch, s.to_epoch) for s in stats[:2]] == [("a", 0, 1), ("b", 0, 1)]

    def test_shape_drift(self):
        with pytest.raises(ConvLensError, match="cambia de tamaño"):
            SnapshotSeries([{"w": [1.0, 2.0]}, {"w": [1.0]}])


class TestTensorFiles:

    def test_parse_and_write(self):
        text = '[{"name": "f0", "shape": [2, 2], "values": [1, 2, 3, 4]}]'
        tensors = predops_service.parse_tensors(text)
        assert_allclose(tensors["f0"], [[1, 2], [3, 4]])
        again = predops_service.parse_tensors(predops_service.tensors_to_json(tensors))
        assert_allclose(again["f0"], tensors["f0"])

    def test_declared_shape_must_match(self):
        with pytest.raises(ConvLensError):
            predops_service.parse_tensors('[{"name": "f0", "shape": [3], "values": [1, 2]}]')

    def test_duplicate_names(self):
        text = '[{"name": "f", "shape": [1], "values": [1]}, {"name": "f", "shape": [1], "values": [2]}]'
        with pytest.raises(ConvLensError, match="repetido"):
            predops_service.parse_tensors(text)

    def test_snapshots_are_grouped_by_epoch(self):
        tensors = {"0/conv": np.zeros(2), "0/fc": np.zeros(1), "1/fc": np.ones(1), "1/conv": np.ones(2)}
        series = predops_service.snapshots_from_tensors(tensors)
        assert len(series) == 2
        assert series.layer_names == ("conv", "fc")

    def test_snapshot_epochs_must_be_consecutive(self):
        with pytest.raises(ConvLensError, match="consecutivas"):
            predops_service.snapshots_from_tensors({"0/w": np.zeros(1), "2/w": np.zeros(1)})

    def test_snapshot_name_format(self):
        with pytest.raises(ConvLensError):
            predops_service.snapshots_from_tensors({"w": np.zeros(1)})
