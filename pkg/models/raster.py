"""
models/raster.py - ConvLens

Imágenes y mapas de etiquetas en memoria.
"""

from typing import Tuple

import numpy as np

from services.errors import ConvLensError


class Raster:
    """
    Imagen de w×h píxeles y c canales.

    Atributos:
        values (np.ndarray): Forma (alto, ancho, canales); int64 para etiquetas,
            float64 para imágenes
        is_label (bool): True si el contenido son ids de clase
    """

    def __init__(self, values, is_label: bool = False):
        array = np.asarray(values)
        if array.ndim == 2:
            array = array[:, :, np.newaxis]
        if array.ndim != 3 or array.shape[0] < 1 or array.shape[1] < 1 or array.shape[2] < 1:
            raise ConvLensError(f"Un raster necesita forma (alto, ancho, canales), recibido {array.shape}")
        if is_label:
            if array.shape[2] != 1:
                raise ConvLensError("Un raster de etiquetas tiene un solo canal")
            if array.dtype.kind == "f" and not np.all(array == np.floor(array)):
                raise ConvLensError("Las etiquetas deben ser enteras")
            array = array.astype(np.int64)
            if np.any(array < 0):
                raise ConvLensError("Las etiquetas no pueden ser negativas")
        else:
            array = array.astype(np.float64)
        array.setflags(write=False)
        self.values: np.ndarray = array
        self.is_label = is_label

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.width, self.height, self.channels

    def crop(self, x: int, y: int, w: int, h: int) -> "Raster":
        return Raster(self.values[y:y + h, x:x + w, :], is_label=self.is_label)

    def __str__(self) -> str:
        kind = "labels" if self.is_label else "image"
        return f"Raster({kind}, {self.width}×{self.height}×{self.channels})"
