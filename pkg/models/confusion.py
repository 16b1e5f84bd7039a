"""
models/confusion.py - ConvLens

Matriz de confusión: filas = clase real, columnas = clase predicha.
"""

from typing import List, Optional, Sequence

import numpy as np

from services.errors import ConvLensError


class ConfusionMatrix:
    """
    Matriz de confusión K×K con nombres de clase.

    Atributos:
        labels (tuple[str, ...]): Nombres de las K clases, únicos
        cells (np.ndarray): Conteos int64 no negativos; cells[i, j] cuenta las
            muestras de la clase real i predichas como j. Solo lectura.
    """

    def __init__(self, cells, labels: Optional[Sequence[str]] = None):
        matrix = np.asarray(cells)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ConvLensError(f"La matriz de confusión debe ser cuadrada, forma {matrix.shape}")
        k = matrix.shape[0]
        if k < 2:
            raise ConvLensError("Se necesitan al menos 2 clases")
        if matrix.dtype.kind == "f":
            if not np.all(np.isfinite(matrix)) or not np.all(matrix == np.floor(matrix)):
                raise ConvLensError("Los conteos deben ser enteros")
        elif matrix.dtype.kind not in "iub":
            raise ConvLensError(f"Tipo de celda no soportado: {matrix.dtype}")
        matrix = matrix.astype(np.int64)
        if np.any(matrix < 0):
            raise ConvLensError("Los conteos no pueden ser negativos")
        if not np.any(matrix > 0):
            raise ConvLensError("La matriz de confusión está vacía (todas las celdas son 0)")

        if labels is None:
            labels = [str(i) for i in range(k)]
        labels = tuple(str(label) for label in labels)
        if len(labels) != k:
            raise ConvLensError(f"Se esperaban {k} etiquetas, hay {len(labels)}")
        if len(set(labels)) != k:
            raise ConvLensError("Las etiquetas de clase deben ser únicas")

        matrix.setflags(write=False)
        self.cells: np.ndarray = matrix
        self.labels: tuple = labels

    @property
    def k(self) -> int:
        """Número de clases"""
        return self.cells.shape[0]

    def row_sums(self) -> np.ndarray:
        """r(i): muestras de cada clase real"""
        return self.cells.sum(axis=1)

    def total(self) -> int:
        return int(self.cells.sum())

    def to_rows(self) -> List[List[int]]:
        return self.cells.tolist()

    def __str__(self) -> str:
        return f"ConfusionMatrix(k={self.k}, total={self.total()})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ConfusionMatrix):
            return self.labels == other.labels and np.array_equal(self.cells, other.cells)
        return False

    __hash__ = None
