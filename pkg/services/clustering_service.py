"""
services/clustering_service.py - ConvLens

Corte de una matriz ordenada en clusters de clases (umbral fijo, por
percentil o interactivo) y comparación con agrupaciones gruesas.
"""

import json
import logging
import math
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from models.cluster import ClusterPlan, Clustering
from models.confusion import ConfusionMatrix
from models.permutation import Permutation
from schemas.cluster_schemas import (
    ClusterErrorReport,
    ClusterErrorRow,
    ClusteringFile,
    ClusterPlanRead,
    NamedClusteringFile,
)
from .errors import ConvLensError

logger = logging.getLogger(__name__)

# Recibe (clase izquierda, clase derecha, fuerza) y responde si van juntas
Responder = Callable[[str, str, int], bool]


# ==================== FUERZAS Y CORTES ====================

def adjacency_strengths(c: ConfusionMatrix, order: Permutation) -> List[int]:
    """a_i = C'[i, i+1] + C'[i+1, i] sobre la matriz ordenada."""
    if len(order) != c.k:
        raise ConvLensError(f"La permutación tiene {len(order)} posiciones para {c.k} clases")
    index = order.as_array()
    ordered = c.cells[np.ix_(index, index)]
    upper = np.diagonal(ordered, offset=1)
    lower = np.diagonal(ordered, offset=-1)
    return (upper + lower).tolist()


def split_by_threshold(c: ConfusionMatrix, order: Permutation, theta: int) -> ClusterPlan:
    """
    Corta entre las posiciones i e i+1 cuando a_i < θ.

    Args:
        c: Matriz de confusión
        order: Orden de visualización (normalmente el de anneal_order)
        theta: Umbral θ >= 0; θ = 0 deja un único cluster

    Returns:
        ClusterPlan
    """
    plan = ClusterPlan(order, adjacency_strengths(c, order), theta)
    logger.debug("θ=%d -> %d clusters", theta, len(plan.clusters))
    return plan


def percentile_threshold(strengths: Sequence[int], fraction_above: float) -> int:
    """
    Menor θ entero tal que #{a_i >= θ} / (K - 1) <= fraction_above.

    Es (mayor fuerza que incumple la cota) + 1, igual que el umbral
    interactivo con la mayor respuesta "no". Si ninguna fuerza la incumple
    se devuelve la mínima: todos los pares siguen unidos.

    Raises:
        ConvLensError: Fuerzas vacías o fracción fuera de (0, 1]
    """
    if not strengths:
        raise ConvLensError("No hay fuerzas de adyacencia")
    if not 0 < fraction_above <= 1:
        raise ConvLensError(f"La fracción debe estar en (0, 1]: {fraction_above}")
    values = np.asarray(strengths, dtype=np.int64)
    failing = [
        strength for strength in set(values.tolist())
        if np.count_nonzero(values >= strength) / values.size > fraction_above
    ]
    if not failing:
        return int(values.min())
    return max(failing) + 1


def interactive_threshold(strengths: Sequence[int], responder: Responder,
                          labels: Optional[Sequence[str]] = None) -> int:
    """
    Búsqueda binaria sobre las fuerzas distintas ordenadas.

    Cada consulta presenta el primer par adyacente cuya fuerza es el punto
    medio actual. "Sí" acota θ <= fuerza y "no" acota θ > fuerza, así que
    bastan ceil(log2(m + 1)) consultas para m valores distintos.

    Args:
        strengths: K-1 fuerzas sobre la matriz ordenada
        responder: Función que contesta cada consulta
        labels: Nombres de las K clases en orden de visualización

    Returns:
        θ = (mayor fuerza con "no") + 1, o 0 si todas las respuestas son "sí"
    """
    if not strengths:
        raise ConvLensError("No hay fuerzas de adyacencia")
    if labels is None:
        labels = [str(i) for i in range(len(strengths) + 1)]
    values = sorted(set(int(a) for a in strengths))
    first_boundary = {}
    for position, strength in enumerate(strengths):
        first_boundary.setdefault(int(strength), position)

    low, high = 0, len(values)
    queries = 0
    while low < high:
        middle = (low + high) // 2
        strength = values[middle]
        position = first_boundary[strength]
        queries += 1
        if responder(labels[position], labels[position + 1], strength):
            high = middle
        else:
            low = middle + 1

    logger.debug("Umbral interactivo tras %d consultas (m=%d)", queries, len(values))
    return 0 if low == 0 else values[low - 1] + 1


class ScriptedResponder:
    """Responde a partir de una cadena como "nyyn" ('y'/'s' = sí, 'n' = no)."""

    def __init__(self, answers: str):
        self.answers = answers.strip().lower()
        self.position = 0

    def __call__(self, left: str, right: str, strength: int) -> bool:
        if self.position >= len(self.answers):
            raise ConvLensError(
                f"Faltan respuestas: se preguntó por ({left}, {right}) con fuerza {strength}"
            )
        answer = self.answers[self.position]
        self.position += 1
        if answer in "ys":
            return True
        if answer == "n":
            return False
        raise ConvLensError(f"Respuesta no válida: '{answer}' (usa y/n)")


def max_queries(distinct: int) -> int:
    return math.ceil(math.log2(distinct + 1))


def cluster_names(c: ConfusionMatrix, plan: ClusterPlan) -> Clustering:
    """Convierte los rangos del plan en grupos de nombres de clase."""
    return Clustering([[c.labels[i] for i in members] for members in plan.members()])


def plan_to_read(c: ConfusionMatrix, plan: ClusterPlan) -> ClusterPlanRead:
    return ClusterPlanRead(
        order=plan.order.to_list(),
        strengths=list(plan.strengths),
        threshold=plan.threshold,
        clusters=[[a, b] for a, b in plan.clusters],
        groups=[[c.labels[i] for i in members] for members in plan.members()],
    )


# ==================== ERROR FRENTE A GRUPOS GRUESOS ====================

def cluster_error(candidate: Clustering, coarse: Clustering) -> ClusterErrorReport:
    """
    Para cada grupo grueso G: n = grupos candidatos que lo tocan,
    M⁻ = clases ajenas a G dentro de esos grupos y error = (n - 1) + |M⁻|.

    Raises:
        ConvLensError: Si alguna clase gruesa no aparece en la agrupación candidata
    """
    missing = sorted(coarse.universe - candidate.universe)
    if missing:
        raise ConvLensError(f"Clases ausentes en la agrupación candidata: {', '.join(missing)}")

    rows = []
    for name, group in zip(coarse.names, coarse.groups):
        touched = [g for g in candidate.groups if g & group]
        merged = frozenset().union(*touched)
        intruders = sorted(merged - group)
        rows.append(ClusterErrorRow(
            group=name,
            touched=len(touched),
            intruders=intruders,
            error=(len(touched) - 1) + len(intruders),
        ))
    return ClusterErrorReport(rows=rows, total=sum(r.error for r in rows))


# ==================== LECTURA / ESCRITURA ====================

def parse_clustering(text: str) -> Clustering:
    """
    Acepta un objeto {nombre: [clases]}, un array de arrays o el JSON que
    escribe el comando cluster (se usa su campo "groups").
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConvLensError(f"JSON no válido en la agrupación: {exc}") from None
    try:
        if isinstance(document, dict) and set(ClusterPlanRead.model_fields) <= set(document):
            return Clustering(ClusterPlanRead.model_validate(document).groups)
        if isinstance(document, dict):
            named = NamedClusteringFile.model_validate(document).root
            return Clustering(named.values(), list(named.keys()))
        return Clustering(ClusteringFile.model_validate(document).root)
    except ValidationError as exc:
        raise ConvLensError(f"Formato de agrupación no válido: {exc.errors()[0]['msg']}") from None


def read_clustering(path: Union[str, Path]) -> Clustering:
    return parse_clustering(Path(path).read_text(encoding="utf-8"))


def clustering_to_json(clustering: Clustering) -> str:
    groups = [sorted(g) for g in clustering.groups]
    return ClusteringFile(groups).model_dump_json(indent=2)
