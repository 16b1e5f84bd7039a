"""
services/predops_service.py - ConvLens

Utilidades en el espacio de predicciones y de pesos: ensembles,
suavizado de etiquetas, funciones de activación, correlación de filtros
por traslación y estadísticas de actualización de pesos.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from models.tensor import FilterTensor, PredictionSet, SnapshotSeries
from schemas.tensor_schemas import ActivationInfo, ActivationValue, TensorFile, TensorRecord, UpdateStat
from .confmat_service import read_prediction_rows
from .errors import ConvLensError, InvariantViolation

logger = logging.getLogger(__name__)

# ==================== CONFIGURACIÓN ====================

DEFAULT_ALPHA = 0.01
ALPHA_ACTIVATIONS = ("lrelu", "prelu", "elu")
CORRELATION_TOLERANCE = 1e-9


# ==================== ENSEMBLES Y SUAVIZADO ====================

def ensemble_average(members: Sequence[PredictionSet]) -> PredictionSet:
    """
    Media elemento a elemento de las predicciones de varios clasificadores.

    Raises:
        ConvLensError: Lista vacía o formas distintas
    """
    if not members:
        raise ConvLensError("El ensemble necesita al menos un miembro")
    shape = members[0].shape
    for index, member in enumerate(members):
        if member.shape != shape:
            raise ConvLensError(f"El miembro {index} tiene forma {member.shape}, se esperaba {shape}")
    return PredictionSet(np.mean([m.rows for m in members], axis=0))


def smooth_labels(targets: PredictionSet, ensemble: PredictionSet, alpha: float) -> PredictionSet:
    """t' = α·t + (1 - α)·y_E"""
    if not 0 <= alpha <= 1:
        raise ConvLensError(f"α debe estar en [0, 1]: {alpha}")
    if targets.shape != ensemble.shape:
        raise ConvLensError(f"Formas distintas: objetivos {targets.shape}, ensemble {ensemble.shape}")
    return PredictionSet(alpha * targets.rows + (1.0 - alpha) * ensemble.rows)


def read_predictions(path: Union[str, Path]) -> PredictionSet:
    return PredictionSet(read_prediction_rows(path))


# ==================== FUNCIONES DE ACTIVACIÓN ====================

def _logistic(x: float) -> float:
    return float(0.5 * (1.0 + np.tanh(0.5 * x)))


def _relu(x: float) -> float:
    return max(0.0, x)


# Cada entrada: (valor, derivada). En los puntos no derivables se usa el
# límite por la derecha.
_ACTIVATIONS: Dict[str, Callable[[float, float], Tuple[float, float]]] = {
    "identity": lambda x, a: (x, 1.0),
    "logistic": lambda x, a: (_logistic(x), _logistic(x) * (1.0 - _logistic(x))),
    "logistic_minus": lambda x, a: (_logistic(x) - 0.5, _logistic(x) * (1.0 - _logistic(x))),
    "tanh": lambda x, a: (float(np.tanh(x)), float(1.0 - np.tanh(x) ** 2)),
    "softsign": lambda x, a: (x / (1.0 + abs(x)), 1.0 / (1.0 + abs(x)) ** 2),
    "relu": lambda x, a: (_relu(x), 1.0 if x >= 0 else 0.0),
    "relu_minus": lambda x, a: (max(-1.0, x), 1.0 if x >= -1 else 0.0),
    "softplus": lambda x, a: (float(np.logaddexp(0.0, x)), _logistic(x)),
    "s2relu": lambda x, a: (
        _relu(x / 2 + 1) - _relu(-x / 2 + 1),
        1.0 if -2 <= x < 2 else 0.5,
    ),
    "lrelu": lambda x, a: (x if x >= 0 else a * x, 1.0 if x >= 0 else a),
    "prelu": lambda x, a: (x if x >= 0 else a * x, 1.0 if x >= 0 else a),
    "elu": lambda x, a: (x if x > 0 else float(a * np.expm1(x)), 1.0 if x >= 0 else float(a * np.exp(x))),
    "sign": lambda x, a: (1.0 if x >= 0 else -1.0, 0.0),
    "heaviside": lambda x, a: (1.0 if x >= 0 else 0.0, 0.0),
}

ACTIVATION_NAMES = tuple(_ACTIVATIONS)


def activation(name: str, x: float, alpha: Optional[float] = None) -> ActivationValue:
    """
    Valor y derivada de una activación en x.

    Args:
        name: Nombre de la función (ver ACTIVATION_NAMES)
        x: Punto de evaluación
        alpha: Parámetro de lrelu, prelu y elu, en (0, 1); 0.01 por defecto

    Raises:
        ConvLensError: Nombre desconocido o α fuera de (0, 1)
    """
    function = _ACTIVATIONS.get(name)
    if function is None:
        raise ConvLensError(f"Activación desconocida '{name}'. Disponibles: {', '.join(ACTIVATION_NAMES)}")
    if alpha is None:
        alpha = DEFAULT_ALPHA
    if name in ALPHA_ACTIVATIONS and not 0 < alpha < 1:
        raise ConvLensError(f"α debe estar en (0, 1) para {name}: {alpha}")
    value, derivative = function(float(x), float(alpha))
    return ActivationValue(name=name, x=float(x), value=float(value), derivative=float(derivative))


def softmax(x: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Softmax estable (resta el máximo) y su derivada diagonal o_j(1 - o_j)."""
    values = np.asarray(x, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ConvLensError("softmax necesita un vector no vacío")
    exp = np.exp(values - values.max())
    out = exp / exp.sum()
    return out, out * (1.0 - out)


def maxout(x: Sequence[float]) -> Tuple[float, np.ndarray]:
    """Máximo del vector y derivada one-hot en el primer máximo."""
    values = np.asarray(x, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ConvLensError("maxout necesita un vector no vacío")
    index = int(np.argmax(values))
    derivative = np.zeros_like(values)
    derivative[index] = 1.0
    return float(values[index]), derivative


_CATALOG = (
    ("identity", "(-inf, +inf)", False, True, "no"),
    ("logistic", "[0, 1]", True, False, "yes"),
    ("logistic_minus", "[-0.5, 0.5]", True, True, "yes"),
    ("softmax", "[0, 1]^K", True, True, "yes"),
    ("tanh", "[-1, 1]", True, True, "yes"),
    ("softsign", "(-1, 1)", True, True, "yes"),
    ("relu", "[0, +inf)", True, False, "half-sided"),
    ("relu_minus", "[-1, +inf)", True, True, "half-sided"),
    ("softplus", "(0, +inf)", False, False, "half-sided"),
    ("s2relu", "(-inf, +inf)", False, True, "no"),
    ("lrelu", "(-inf, +inf)", False, True, "no"),
    ("prelu", "(-inf, +inf)", False, True, "no"),
    ("elu", "(-alpha, +inf)", False, True, "no"),
    ("sign", "{-1, 1}", True, True, "yes"),
    ("heaviside", "{0, 1}", True, False, "yes"),
)


def activation_catalog() -> List[ActivationInfo]:
    """Rango y propiedades teóricas de cada activación."""
    return [
        ActivationInfo(name=name, value_range=value_range, vanishing_gradient=vanishing,
                       negative_activation=negative, bound_activation=bound)
        for name, value_range, vanishing, negative, bound in _CATALOG
    ]


# ==================== CORRELACIÓN POR TRASLACIÓN ====================

def _overlap(size: int, shift: int) -> Tuple[slice, slice]:
    """(destino, origen) de shifted[i + shift] = b[i] a lo largo de un eje."""
    if shift >= 0:
        return slice(shift, size), slice(0, size - shift)
    return slice(0, size + shift), slice(-shift, size)


def k_translation_correlation(a: FilterTensor, b: FilterTensor, k: int) -> float:
    """
    max sobre (x, y) ∈ {-k..k}² \\ {(0, 0)} de ⟨a, T(b, x, y)⟩ / (‖a‖·‖b‖),
    donde T desplaza b rellenando con ceros y el primer eje es el ancho.

    Raises:
        ConvLensError: Dimensiones distintas, k < 1 o filtro de norma 0
        InvariantViolation: El cociente sale de [-1, 1] más la tolerancia
    """
    if k < 1:
        raise ConvLensError(f"k debe ser >= 1: {k}")
    if a.dims != b.dims:
        raise ConvLensError(f"Dimensiones distintas: {a.dims} y {b.dims}")
    norm = a.norm() * b.norm()
    if norm == 0:
        raise ConvLensError("La correlación no está definida para filtros de norma 0")

    width, height, _ = a.dims
    best = None
    for dx in range(-k, k + 1):
        for dy in range(-k, k + 1):
            if dx == 0 and dy == 0:
                continue
            if abs(dx) >= width or abs(dy) >= height:
                inner = 0.0
            else:
                dst_x, src_x = _overlap(width, dx)
                dst_y, src_y = _overlap(height, dy)
                inner = float(np.sum(a.values[dst_x, dst_y, :] * b.values[src_x, src_y, :]))
            if best is None or inner > best:
                best = inner
    value = best / norm
    if abs(value) > 1.0 + CORRELATION_TOLERANCE:
        raise InvariantViolation(f"Correlación fuera de [-1, 1]: {value!r}")
    return float(value)


def avg_max_translation_correlation(layer: Sequence[FilterTensor], k: int) -> float:
    """ρ̄_k = (1/N) Σ_i max_{j != i} ρ_k(W_i, W_j)"""
    if len(layer) < 2:
        raise ConvLensError("Se necesitan al menos 2 filtros")
    maxima = []
    for i, filter_i in enumerate(layer):
        maxima.append(max(
            k_translation_correlation(filter_i, filter_j, k)
            for j, filter_j in enumerate(layer) if j != i
        ))
    return float(np.mean(maxima))


# ==================== ACTUALIZACIONES DE PESOS ====================

def weight_update_stats(series: SnapshotSeries) -> List[UpdateStat]:
    """Media, máximo y suma de |Δw| por capa y por par de épocas consecutivas."""
    stats = []
    for epoch in range(1, len(series)):
        for name in series.layer_names:
            delta = np.abs(series.epochs[epoch][name] - series.epochs[epoch - 1][name])
            stats.append(UpdateStat(
                layer=name,
                from_epoch=epoch - 1,
                to_epoch=epoch,
                mean=float(delta.mean()) if delta.size else 0.0,
                max=float(delta.max()) if delta.size else 0.0,
                sum=float(delta.sum()),
            ))
    return stats


# ==================== CONTENEDOR DE TENSORES ====================

def parse_tensors(text: str) -> Dict[str, np.ndarray]:
    """Lee un array JSON de {"name", "shape", "values"} (row-major)."""
    try:
        records = TensorFile.model_validate_json(text).root
    except ValidationError as exc:
        raise ConvLensError(f"Fichero de tensores no válido: {exc.errors()[0]['msg']}") from None
    tensors: Dict[str, np.ndarray] = {}
    for record in records:
        if record.name in tensors:
            raise ConvLensError(f"Tensor repetido: '{record.name}'")
        tensors[record.name] = np.asarray(record.values, dtype=np.float64).reshape(record.shape)
    return tensors


def read_tensors(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    return parse_tensors(Path(path).read_text(encoding="utf-8"))


def tensors_to_json(tensors: Dict[str, np.ndarray]) -> str:
    records = [
        TensorRecord(name=name, shape=list(np.shape(values)) or [1],
                     values=np.asarray(values, dtype=np.float64).ravel().tolist())
        for name, values in tensors.items()
    ]
    return TensorFile(records).model_dump_json(indent=2)


def filters_from_tensors(tensors: Dict[str, np.ndarray]) -> List[FilterTensor]:
    return [FilterTensor(values, name=name) for name, values in tensors.items()]


def snapshots_from_tensors(tensors: Dict[str, np.ndarray]) -> SnapshotSeries:
    """
    Agrupa tensores llamados "<época>/<capa>" en una serie por épocas.

    Raises:
        ConvLensError: Nombre sin época entera o épocas no consecutivas desde 0
    """
    epochs: Dict[int, Dict[str, np.ndarray]] = {}
    for name, values in tensors.items():
        prefix, _, layer = name.partition("/")
        if not layer or not prefix.isdigit():
            raise ConvLensError(f"Nombre de snapshot no válido '{name}' (se espera '<época>/<capa>')")
        epochs.setdefault(int(prefix), {})[layer] = values
    numbers = sorted(epochs)
    if not numbers or numbers != list(range(len(numbers))):
        raise ConvLensError(f"Las épocas deben ser consecutivas desde 0: {numbers}")
    logger.debug("Serie de %d épocas", len(numbers))
    layers = list(epochs[0])
    for n in numbers:
        if set(epochs[n]) != set(layers):
            raise ConvLensError(f"La época {n} no tiene las mismas capas que la época 0")
    return SnapshotSeries([{layer: epochs[n][layer] for layer in layers} for n in numbers])
