"""
services/ordering_service.py - ConvLens

Ordenación de clases de una matriz de confusión: minimiza
f(C) = Σ C_ij·|i - j| con recocido simulado o, para K pequeño, por
fuerza bruta.
"""

import itertools
import logging
import math
from typing import List, Optional

import numpy as np

from models.confusion import ConfusionMatrix
from models.permutation import Permutation
from schemas.ordering_schemas import AnnealSchedule, OrderingResult
from .errors import ConvLensError, InvariantViolation
from .random_stream import SplitMix64

logger = logging.getLogger(__name__)

# ==================== CONFIGURACIÓN ====================

BRUTE_FORCE_MAX_K = 10
BRUTE_FORCE_BATCH = 20000
DEFAULT_STEPS_PER_CLASS = 1500
DEFAULT_RESTARTS = 3
FINAL_TEMPERATURE_RATIO = 0.001


# ==================== FUNCIÓN OBJETIVO ====================

def _distances(k: int) -> np.ndarray:
    positions = np.arange(k)
    return np.abs(positions[:, np.newaxis] - positions[np.newaxis, :])


def objective_value(c: ConfusionMatrix, perm: Permutation) -> int:
    """
    Calcula f(C) = Σ_{i,j} C[order[i]][order[j]]·|i - j|.

    Raises:
        ConvLensError: Si la permutación no tiene longitud K
    """
    if len(perm) != c.k:
        raise ConvLensError(f"La permutación tiene {len(perm)} posiciones para {c.k} clases")
    order = perm.as_array()
    ordered = c.cells[np.ix_(order, order)]
    return int(np.sum(ordered * _distances(c.k)))


def _checked_result(c: ConfusionMatrix, order, objective: int, initial: int,
                    trace: Optional[List[int]] = None) -> OrderingResult:
    perm = Permutation(order)
    recomputed = objective_value(c, perm)
    if recomputed != objective:
        raise InvariantViolation(
            f"Objetivo incremental {objective} distinto del recalculado {recomputed}"
        )
    if objective > initial:
        raise InvariantViolation(f"El objetivo {objective} supera al inicial {initial}")
    return OrderingResult(order=perm.to_list(), objective=objective,
                          initial_objective=initial, trace=trace)


# ==================== FUERZA BRUTA ====================

def brute_force_order(c: ConfusionMatrix) -> OrderingResult:
    """
    Busca el mínimo global recorriendo las K! permutaciones en orden
    lexicográfico. Entre órdenes co-óptimos devuelve el primero.

    Raises:
        ConvLensError: Si K > 10
    """
    k = c.k
    if k > BRUTE_FORCE_MAX_K:
        raise ConvLensError(f"Fuerza bruta limitada a K <= {BRUTE_FORCE_MAX_K} (K = {k})")

    distances = _distances(k)
    cells = c.cells
    best_value = None
    best_order = None
    permutations = itertools.permutations(range(k))
    while True:
        batch = np.array(list(itertools.islice(permutations, BRUTE_FORCE_BATCH)), dtype=np.intp)
        if batch.size == 0:
            break
        ordered = cells[batch[:, :, np.newaxis], batch[:, np.newaxis, :]]
        values = np.sum(ordered * distances, axis=(1, 2))
        index = int(np.argmin(values))
        if best_value is None or values[index] < best_value:
            best_value = int(values[index])
            best_order = batch[index].tolist()

    initial = objective_value(c, Permutation.identity(k))
    logger.debug("Fuerza bruta K=%d: óptimo %d (inicial %d)", k, best_value, initial)
    return _checked_result(c, best_order, best_value, initial)


# ==================== RECOCIDO SIMULADO ====================

def default_schedule(c: ConfusionMatrix, steps: Optional[int] = None, t0: Optional[float] = None,
                     cooling: Optional[float] = None, restarts: int = DEFAULT_RESTARTS,
                     seed: int = 0, metropolis: str = "best", trace_every: int = 0) -> AnnealSchedule:
    """
    Completa un calendario con los valores por defecto:
    steps = 1500·K, t0 = max(1, f(inicial)/(10·K)) y un enfriamiento que
    lleva T a t0/1000 al final del presupuesto.
    """
    if steps is None:
        steps = DEFAULT_STEPS_PER_CLASS * c.k
    if t0 is None:
        initial = objective_value(c, Permutation.identity(c.k))
        t0 = max(1.0, initial / (10.0 * c.k))
    if cooling is None:
        cooling = FINAL_TEMPERATURE_RATIO ** (1.0 / steps)
    return AnnealSchedule(steps=steps, t0=t0, cooling=cooling, restarts=restarts,
                          seed=seed, metropolis=metropolis, trace_every=trace_every)


def _run_chain(c: ConfusionMatrix, schedule: AnnealSchedule, chain: int):
    """Una cadena de recocido. Devuelve (mejor objetivo, mejor orden, traza)."""
    k = c.k
    rng = SplitMix64(schedule.seed ^ chain)
    distances = _distances(k)
    positions = np.arange(k)

    order = list(range(k))
    ordered = c.cells.copy()
    current = int(np.sum(ordered * distances))
    best = current
    best_order = list(order)
    temperature = schedule.t0
    trace: List[int] = []

    for step in range(schedule.steps):
        if rng.next_float() < 0.5:
            # Intercambio de las filas (y columnas) i y j
            i = rng.randint(k)
            j = rng.randint(k - 1)
            if j >= i:
                j += 1
            strength = ordered[i] + ordered[:, i] - ordered[j] - ordered[:, j]
            shift = np.abs(positions - j) - np.abs(positions - i)
            terms = strength * shift
            terms[i] = 0
            terms[j] = 0
            candidate = current + int(terms.sum())
            move = ("swap", i, j)
        else:
            # Mover el bloque [s..e] al hueco ins entre las filas restantes
            s = rng.randint(k)
            e = s + rng.randint(k - s)
            length = e - s + 1
            ins = rng.randint(k - length + 1)
            rest = list(range(s)) + list(range(e + 1, k))
            index = rest[:ins] + list(range(s, e + 1)) + rest[ins:]
            moved = ordered[np.ix_(index, index)]
            candidate = int(np.sum(moved * distances))
            move = ("block", index, moved)

        u = rng.next_float()
        reference = best if schedule.metropolis == "best" else current
        exponent = (reference - candidate) / temperature
        if exponent >= 0 or u < math.exp(exponent):
            if move[0] == "swap":
                _, i, j = move
                ordered[[i, j]] = ordered[[j, i]]
                ordered[:, [i, j]] = ordered[:, [j, i]]
                order[i], order[j] = order[j], order[i]
            else:
                _, index, moved = move
                ordered = moved
                order = [order[p] for p in index]
            current = candidate
            if current < best:
                best = current
                best_order = list(order)

        temperature *= schedule.cooling
        if schedule.trace_every and (step + 1) % schedule.trace_every == 0:
            trace.append(best)

    return best, best_order, trace


def anneal_order(c: ConfusionMatrix, schedule: AnnealSchedule) -> OrderingResult:
    """
    Minimiza f(C) con recocido simulado.

    Cada paso propone, con probabilidad 0.5, un intercambio de dos filas o
    el desplazamiento de un bloque de filas consecutivas. Ambas propuestas
    pasan el mismo criterio de Metropolis y la temperatura se enfría en
    cada paso. Se ejecutan `restarts` cadenas con semillas seed XOR índice
    y gana el menor objetivo (empates a la cadena de menor índice).

    Args:
        c: Matriz de confusión
        schedule: Calendario de recocido validado

    Returns:
        OrderingResult con el mejor orden encontrado

    Raises:
        InvariantViolation: Si el objetivo incremental no coincide con el recalculado
    """
    initial = objective_value(c, Permutation.identity(c.k))
    winner = None
    for chain in range(schedule.restarts):
        best, best_order, trace = _run_chain(c, schedule, chain)
        logger.debug("Cadena %d: objetivo %d (inicial %d)", chain, best, initial)
        if winner is None or best < winner[0]:
            winner = (best, best_order, trace)

    best, best_order, trace = winner
    return _checked_result(c, best_order, best, initial,
                           trace if schedule.trace_every else None)
