"""
models/tensor.py - ConvLens

Tensores de análisis: conjuntos de predicciones, filtros y series de
pesos por época.
"""

from typing import Dict, List, Sequence, Tuple

import numpy as np

from services.errors import ConvLensError

ROW_SUM_TOLERANCE = 1e-6


class PredictionSet:
    """
    Predicciones N×K estocásticas por filas.

    Atributos:
        rows (np.ndarray): float64, cada fila en [0, 1] y suma 1 (± 1e-6)
    """

    def __init__(self, rows, check_stochastic: bool = True):
        matrix = np.asarray(rows, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
            raise ConvLensError(f"Se esperaba una matriz N×K no vacía, forma {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ConvLensError("Las predicciones contienen valores no finitos")
        if check_stochastic:
            if np.any(matrix < 0) or np.any(matrix > 1):
                raise ConvLensError("Las predicciones deben estar en [0, 1]")
            sums = matrix.sum(axis=1)
            bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOLERANCE)
            if bad.size:
                raise ConvLensError(f"La fila {int(bad[0])} suma {sums[bad[0]]:.9f}, no 1")
        matrix.setflags(write=False)
        self.rows: np.ndarray = matrix

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows.shape

    def __len__(self) -> int:
        return self.rows.shape[0]


class FilterTensor:
    """
    Filtro k_w × k_h × d. values[x, y, c], con el primer eje = ancho.
    """

    def __init__(self, values, name: str = ""):
        array = np.asarray(values, dtype=np.float64)
        if array.ndim == 2:
            array = array[:, :, np.newaxis]
        if array.ndim != 3 or min(array.shape) < 1:
            raise ConvLensError(f"Un filtro necesita forma (k_w, k_h, d), recibido {array.shape}")
        array.setflags(write=False)
        self.values: np.ndarray = array
        self.name = name

    @property
    def dims(self) -> Tuple[int, int, int]:
        return self.values.shape

    def norm(self) -> float:
        return float(np.linalg.norm(self.values.ravel()))


class SnapshotSeries:
    """
    Pesos planos por época y por capa.

    Atributos:
        layer_names (tuple[str, ...]): Capas en orden estable
        epochs (list[dict[str, np.ndarray]]): epochs[e][capa] = vector de pesos
    """

    def __init__(self, epochs: Sequence[Dict[str, Sequence[float]]]):
        if len(epochs) < 2:
            raise ConvLensError("Se necesitan al menos 2 épocas para medir actualizaciones")
        names = tuple(epochs[0].keys())
        sizes = {}
        converted: List[Dict[str, np.ndarray]] = []
        for index, epoch in enumerate(epochs):
            if tuple(epoch.keys()) != names:
                raise ConvLensError(f"La época {index} no tiene las mismas capas que la época 0")
            arrays = {}
            for name in names:
                values = np.asarray(epoch[name], dtype=np.float64).ravel()
                expected = sizes.setdefault(name, values.size)
                if values.size != expected:
                    raise ConvLensError(
                        f"La capa '{name}' cambia de tamaño en la época {index}: "
                        f"{values.size} != {expected}"
                    )
                arrays[name] = values
            converted.append(arrays)
        self.layer_names: tuple = names
        self.epochs = converted

    def __len__(self) -> int:
        return len(self.epochs)
