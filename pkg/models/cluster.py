"""
models/cluster.py - ConvLens

Particiones de clases: el plan de cortes sobre una matriz ordenada y las
agrupaciones por nombre que se comparan con la verdad gruesa.
"""

from typing import Dict, FrozenSet, Iterable, List, Sequence, Tuple

from services.errors import ConvLensError
from .permutation import Permutation


class ClusterPlan:
    """
    Clusters contiguos sobre el orden de visualización.

    Atributos:
        order (Permutation): Orden de las clases
        strengths (tuple[int, ...]): K-1 fuerzas a_i = C'[i,i+1] + C'[i+1,i]
        threshold (int): Umbral θ; se corta entre i e i+1 si a_i < θ
        clusters (tuple[tuple[int, int], ...]): Rangos [inicio, fin] inclusivos de posiciones
    """

    def __init__(self, order: Permutation, strengths: Sequence[int], threshold: int):
        if len(strengths) != len(order) - 1:
            raise ConvLensError("Debe haber K-1 fuerzas de adyacencia")
        if threshold < 0:
            raise ConvLensError(f"El umbral no puede ser negativo: {threshold}")
        self.order = order
        self.strengths = tuple(int(a) for a in strengths)
        self.threshold = int(threshold)

        ranges = []
        start = 0
        for position, strength in enumerate(self.strengths):
            if strength < self.threshold:
                ranges.append((start, position))
                start = position + 1
        ranges.append((start, len(order) - 1))
        self.clusters: tuple = tuple(ranges)

    def members(self) -> List[List[int]]:
        """Índices de clase originales de cada cluster, en orden de visualización"""
        return [list(self.order.order[a:b + 1]) for a, b in self.clusters]

    def __str__(self) -> str:
        return f"ClusterPlan(θ={self.threshold}, clusters={len(self.clusters)})"


class Clustering:
    """
    Agrupación de nombres de clase en grupos disjuntos y no vacíos.

    Atributos:
        names (tuple[str, ...]): Nombre de cada grupo
        groups (tuple[frozenset[str], ...]): Clases de cada grupo
    """

    def __init__(self, groups: Iterable[Iterable[str]], names: Sequence[str] = None):
        groups = tuple(frozenset(str(c) for c in group) for group in groups)
        if names is None:
            names = [str(i) for i in range(len(groups))]
        if len(names) != len(groups):
            raise ConvLensError("Cada grupo necesita un nombre")
        seen: Dict[str, int] = {}
        for index, group in enumerate(groups):
            if not group:
                raise ConvLensError(f"El grupo '{names[index]}' está vacío")
            for cls_name in group:
                if cls_name in seen:
                    raise ConvLensError(
                        f"La clase '{cls_name}' aparece en los grupos "
                        f"'{names[seen[cls_name]]}' y '{names[index]}'"
                    )
                seen[cls_name] = index
        self.names: tuple = tuple(str(n) for n in names)
        self.groups: Tuple[FrozenSet[str], ...] = groups
        self._group_of = seen

    @property
    def universe(self) -> FrozenSet[str]:
        return frozenset(self._group_of)

    def group_of(self, cls_name: str) -> int:
        return self._group_of[cls_name]

    def __len__(self) -> int:
        return len(self.groups)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Clustering):
            return set(self.groups) == set(other.groups)
        return False

    __hash__ = None
