"""
models/permutation.py - ConvLens

Permutación de clases para mostrar una matriz de confusión reordenada.
"""

from typing import Iterable, List

import numpy as np

from services.errors import ConvLensError


class Permutation:
    """
    Biyección sobre {0..K-1}.

    Atributos:
        order (tuple[int, ...]): order[p] = clase original mostrada en la posición p
    """

    def __init__(self, order: Iterable[int]):
        order = tuple(int(i) for i in order)
        if sorted(order) != list(range(len(order))):
            raise ConvLensError(f"No es una permutación válida: {list(order)}")
        self.order: tuple = order

    @classmethod
    def identity(cls, k: int) -> "Permutation":
        return cls(range(k))

    def __len__(self) -> int:
        return len(self.order)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.order, dtype=np.intp)

    def inverse(self) -> "Permutation":
        """position[c] = posición de la clase c"""
        inverse = [0] * len(self.order)
        for position, cls_index in enumerate(self.order):
            inverse[cls_index] = position
        return Permutation(inverse)

    def reversed(self) -> "Permutation":
        return Permutation(reversed(self.order))

    def to_list(self) -> List[int]:
        return list(self.order)

    def __str__(self) -> str:
        return f"Permutation({list(self.order)})"

    def __repr__(self) -> str:
        return str(self)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Permutation):
            return self.order == other.order
        return False

    def __hash__(self) -> int:
        return hash(self.order)
