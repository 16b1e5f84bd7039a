"""
tests/test_datagen.py - ConvLens

Filtrado con modos de borde, pooling, recortes y códec Netpbm.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from models.raster import Raster
from models.tensor import FilterTensor
from services import datagen_service
from services.errors import ConvLensError
from services.random_stream import SplitMix64


def filter_oracle(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Doble bucle con relleno de ceros; image es (alto, ancho, canales), kernel (k_w, k_h, d)."""
    height, width, channels = image.shape
    kw, kh, _ = kernel.shape
    first_x, first_y = 1 - math.ceil(kw / 2), 1 - math.ceil(kh / 2)
    out = np.zeros((height, width))
    for y in range(height):
        for x in range(width):
            total = 0.0
            for ix in range(kw):
                for iy in range(kh):
                    sx, sy = x + first_x + ix, y + first_y + iy
                    if 0 <= sx < width and 0 <= sy < height:
                        for c in range(channels):
                            total += image[sy, sx, c] * kernel[ix, iy, c]
            out[y, x] = total
    return out


class TestFilter2d:

    @pytest.mark.parametrize("boundary, expected", [
        ("zero", [6, 6, 6]),
        ("nearest", [8, 10, 12]),
        ("reflect", [9, 10, 11]),
    ])
    def test_boundary_modes(self, boundary, expected):
        image = Raster([[1, 2, 3]])
        kernel = FilterTensor(np.ones((5, 1, 1)))
        result = datagen_service.filter2d(image, kernel, boundary)
        assert_allclose(result.values[:, :, 0], [expected])

    def test_dont_compute_shrinks(self):
        image = Raster(np.arange(20).reshape(4, 5))
        result = datagen_service.filter2d(image, FilterTensor(np.ones((3, 2, 1))), "dont_compute")
        assert (result.width, result.height) == (3, 3)
        assert result.values[0, 0, 0] == 0 + 1 + 2 + 5 + 6 + 7

    def test_dont_compute_kernel_too_large(self):
        with pytest.raises(ConvLensError):
            datagen_service.filter2d(Raster([[1, 2, 3]]), FilterTensor(np.ones((5, 1, 1))), "dont_compute")

    def test_even_kernel_offsets(self):
        image = Raster([[1, 2, 3, 4]])
        kernel = FilterTensor(np.array([1.0, 10.0]).reshape(2, 1, 1))
        result = datagen_service.filter2d(image, kernel, "zero")
        # Desplazamientos 0 y +1 en el eje del ancho
        assert_allclose(result.values[0, :, 0], [21, 32, 43, 4])

    def test_matches_loop_oracle(self, rng):
        for _ in range(100):
            height, width, channels = rng.integers(1, 7, size=3)
            kw, kh = rng.integers(1, 5, size=2)
            image = rng.normal(size=(height, width, channels))
            kernel = rng.normal(size=(kw, kh, channels))
            result = datagen_service.filter2d(Raster(image), FilterTensor(kernel), "zero")
            assert_allclose(result.values[:, :, 0], filter_oracle(image, kernel), atol=1e-9)

    def test_dont_compute_is_zero_padded_interior(self, rng):
        for _ in range(50):
            height, width = rng.integers(4, 9, size=2)
            channels = int(rng.integers(1, 4))
            kw, kh = rng.integers(1, 5, size=2)
            image = Raster(rng.normal(size=(height, width, channels)))
            kernel = FilterTensor(rng.normal(size=(kw, kh, channels)))
            inner = datagen_service.filter2d(image, kernel, "dont_compute")
            padded = datagen_service.filter2d(image, kernel, "zero")
            top, left = math.ceil(kh / 2) - 1, math.ceil(kw / 2) - 1
            assert_allclose(
                inner.values[:, :, 0],
                padded.values[top:top + inner.height, left:left + inner.width, 0],
                atol=1e-9,
            )

    def test_unknown_boundary(self):
        with pytest.raises(ConvLensError, match="desconocido"):
            datagen_service.filter2d(Raster([[1]]), FilterTensor([[1.0]]), "wrap")

    def test_depth_mismatch(self):
        with pytest.raises(ConvLensError):
            datagen_service.filter2d(Raster(np.ones((3, 3, 3))), FilterTensor(np.ones((3, 3, 1))))


class TestPooling:

    @pytest.mark.parametrize("kind, expected", [("max", 4.0), ("avg", 2.5), ("l2", math.sqrt(30))])
    def test_kinds(self, kind, expected):
        result = datagen_service.pool2d(Raster([[1, 2], [3, 4]]), 2, 2, kind)
        assert result.values[0, 0, 0] == pytest.approx(expected)

    def test_stride_and_shape(self):
        result = datagen_service.pool2d(Raster(np.arange(25).reshape(5, 5)), 3, 2, "max")
        assert (result.width, result.height) == (2, 2)
        assert_allclose(result.values[:, :, 0], [[12, 14], [22, 24]])

    @pytest.mark.parametrize("stride", [1, 2])
    def test_average_pooling_is_a_convolution(self, rng, stride):
        image = Raster(rng.normal(size=(9, 7, 3)))
        pooled = datagen_service.pool2d(image, 3, stride, "avg")
        for channel in range(3):
            kernel = datagen_service.avgpool_kernel(3, 3, channel)
            filtered = datagen_service.filter2d(image, kernel, "dont_compute")
            assert_allclose(pooled.values[:, :, channel], filtered.values[::stride, ::stride, 0], atol=1e-9)

    def test_window_larger_than_image(self):
        with pytest.raises(ConvLensError):
            datagen_service.pool2d(Raster([[1, 2]]), 2, 1)


class TestCrops:

    @staticmethod
    def two_halves():
        labels = np.ones((8, 10), dtype=np.int64)
        labels[:, 5:] = 2
        image = np.stack([np.arange(80).reshape(8, 10)] * 3, axis=-1)
        return Raster(image), Raster(labels, is_label=True)

    def test_full_majority_gives_uniform_crops(self):
        image, labels = self.two_halves()
        samples = datagen_service.crop_dataset(image, labels, 4, 4, 60, 1.0, seed=3)
        assert samples
        for sample in samples:
            assert np.all(sample.labels.values == sample.majority_class)
            assert sample.coverage == 1.0
            assert sample.x + 4 <= 5 or sample.x >= 5

    def test_half_majority_accepts_every_draw(self):
        image, labels = self.two_halves()
        samples = datagen_service.crop_dataset(image, labels, 4, 4, 25, 0.5, seed=1)
        assert [s.index for s in samples] == list(range(25))
        for sample in samples:
            assert 0 <= sample.x <= 6 and 0 <= sample.y <= 4
            assert sample.image.dims == (4, 4, 3)
            assert_array_equal(sample.image.values, image.values[sample.y:sample.y + 4, sample.x:sample.x + 4])

    def test_same_seed_same_crops(self):
        image, labels = self.two_halves()
        first = datagen_service.crop_dataset(image, labels, 3, 3, 20, 0.6, seed=9)
        second = datagen_service.crop_dataset(image, labels, 3, 3, 20, 0.6, seed=9)
        assert [(s.x, s.y) for s in first] == [(s.x, s.y) for s in second]

    def test_replay_of_the_stream(self, rng):
        labels = Raster(rng.integers(0, 3, size=(12, 15)), is_label=True)
        image = Raster(rng.normal(size=(12, 15, 3)))
        samples = datagen_service.crop_dataset(image, labels, 3, 2, 100, 0.6, seed=77)

        stream = SplitMix64(77)
        accepted = []
        for index in range(100):
            x = stream.randint_inclusive(0, 15 - 3)
            y = stream.randint_inclusive(0, 12 - 2)
            counts = np.bincount(labels.values[y:y + 2, x:x + 3, 0].ravel())
            if counts.max() / 6 >= 0.6:
                accepted.append((index, x, y, int(np.argmax(counts))))

        assert len(samples) <= 100
        assert [(s.index, s.x, s.y, s.majority_class) for s in samples] == accepted
        for sample in samples:
            recount = np.count_nonzero(sample.labels.values == sample.majority_class)
            assert recount / 6 == pytest.approx(sample.coverage)
            assert sample.coverage >= 0.6

    def test_checkerboard_accepts_every_draw(self):
        labels = Raster(np.indices((6, 6)).sum(axis=0) % 2, is_label=True)
        samples = datagen_service.crop_dataset(Raster(np.zeros((6, 6))), labels, 2, 2, 100, 0.5, seed=5)
        assert len(samples) == 100
        assert {s.majority_class for s in samples} == {0}

    def test_tie_goes_to_lowest_class(self):
        labels = Raster(np.array([[1, 2]]), is_label=True)
        samples = datagen_service.crop_dataset(Raster([[0, 0]]), labels, 2, 1, 1, 0.5, seed=0)
        assert samples[0].majority_class == 1

    def test_crop_larger_than_raster(self):
        image, labels = self.two_halves()
        with pytest.raises(ConvLensError, match="no cabe"):
            datagen_service.crop_dataset(image, labels, 11, 4, 1, 0.5, seed=0)

    def test_majority_range(self):
        image, labels = self.two_halves()
        with pytest.raises(ConvLensError):
            datagen_service.crop_dataset(image, labels, 2, 2, 1, 0.4, seed=0)


class TestNetpbm:

    @pytest.mark.parametrize("binary", [True, False])
    def test_gray_round_trip(self, binary):
        raster = Raster(np.array([[0, 128, 255], [7, 8, 9]]))
        decoded = datagen_service.parse_netpbm(datagen_service.encode_netpbm(raster, binary=binary))
        assert_array_equal(decoded.values, raster.values)

    @pytest.mark.parametrize("binary", [True, False])
    def test_color_round_trip(self, binary):
        raster = Raster(np.arange(18).reshape(2, 3, 3) * 10)
        data = datagen_service.encode_netpbm(raster, binary=binary)
        assert data.startswith(b"P6" if binary else b"P3")
        assert_array_equal(datagen_service.parse_netpbm(data).values, raster.values)

    def test_sixteen_bit_samples_are_big_endian(self):
        data = datagen_service.encode_netpbm(Raster([[300, 1]]))
        assert data == b"P5\n2 1\n300\n\x01\x2c\x00\x01"
        assert_array_equal(datagen_service.parse_netpbm(data).values[0, :, 0], [300, 1])

    def test_header_comments(self):
        raster = datagen_service.parse_netpbm(b"P2\n# creado a mano\n3 1\n# maxval\n9\n1 2 3\n")
        assert_array_equal(raster.values[0, :, 0], [1, 2, 3])

    def test_labels_are_integers(self, tmp_path):
        path = tmp_path / "labels.pgm"
        datagen_service.write_netpbm(Raster([[0, 3], [3, 1]], is_label=True), path)
        labels = datagen_service.read_netpbm(path, is_label=True)
        assert labels.is_label
        assert labels.values.dtype == np.int64

    def test_unsupported_magic(self):
        with pytest.raises(ConvLensError, match="no soportado"):
            datagen_service.parse_netpbm(b"P4\n1 1\n1\n\x00")

    def test_truncated_body(self):
        with pytest.raises(ConvLensError, match="Faltan"):
            datagen_service.parse_netpbm(b"P5\n2 2\n255\n\x00\x01")

    def test_sample_above_maxval(self):
        with pytest.raises(ConvLensError):
            datagen_service.parse_netpbm(b"P2\n1 1\n5\n6\n")
