"""
services/confmat_service.py - ConvLens

Construcción de matrices de confusión, métricas de calidad y la
entropía cruzada regularizada.
"""

import io
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix

from models.confusion import ConfusionMatrix
from models.permutation import Permutation
from schemas.confusion_schemas import ConfusedPair, ConfusionMatrixFile, MetricsReport
from .errors import ConvLensError

logger = logging.getLogger(__name__)

# ==================== CONFIGURACIÓN ====================

DEFAULT_SKEW_EPSILON = 0.01
DEFAULT_CLAMP_EPS = 1e-7
DEFAULT_TOP_CONFUSED = 5


# ==================== CONSTRUCCIÓN ====================

def build_confusion(predictions, true_labels: Sequence[int], labels: Sequence[str]) -> ConfusionMatrix:
    """
    Cuenta predicciones (argmax por fila) contra las clases reales.

    Args:
        predictions: N filas de K probabilidades
        true_labels: N índices de clase en [0, K)
        labels: K nombres de clase

    Returns:
        Matriz de confusión K×K cuya suma es N

    Raises:
        ConvLensError: Filas de distinta longitud, etiqueta fuera de rango o N = 0
    """
    k = len(labels)
    rows = list(predictions)
    if not rows:
        raise ConvLensError("No hay predicciones (N = 0)")
    for index, row in enumerate(rows):
        if len(row) != k:
            raise ConvLensError(f"La fila {index} tiene {len(row)} valores, se esperaban {k}")
    if len(true_labels) != len(rows):
        raise ConvLensError(f"Hay {len(rows)} predicciones y {len(true_labels)} etiquetas")

    matrix = np.asarray(rows, dtype=np.float64)
    truth = np.asarray(true_labels)
    if truth.dtype.kind not in "iu":
        raise ConvLensError("Las etiquetas reales deben ser enteras")
    out_of_range = np.flatnonzero((truth < 0) | (truth >= k))
    if out_of_range.size:
        first = int(out_of_range[0])
        raise ConvLensError(f"Etiqueta fuera de rango en la muestra {first}: {int(truth[first])}")

    # np.argmax devuelve el primer máximo: empates al índice más bajo
    predicted = np.argmax(matrix, axis=1)
    cells = confusion_matrix(truth, predicted, labels=np.arange(k))
    return ConfusionMatrix(cells.astype(np.int64), labels)


def permute(c: ConfusionMatrix, perm: Permutation) -> ConfusionMatrix:
    """Reordena filas y columnas a la vez; las etiquetas acompañan."""
    if len(perm) != c.k:
        raise ConvLensError(f"La permutación tiene {len(perm)} posiciones para {c.k} clases")
    order = perm.as_array()
    return ConfusionMatrix(c.cells[np.ix_(order, order)], [c.labels[i] for i in order])


# ==================== MÉTRICAS ====================

def accuracy(c: ConfusionMatrix) -> float:
    return float(np.trace(c.cells) / c.total())


def error_rate(c: ConfusionMatrix) -> float:
    return 1.0 - accuracy(c)


def mean_accuracy(c: ConfusionMatrix) -> float:
    """Media de c_ii / t_i; las clases sin muestras no entran en la media."""
    t = c.row_sums()
    populated = t > 0
    return float(np.mean(np.diag(c.cells)[populated] / t[populated]))


def confusability(c: ConfusionMatrix) -> np.ndarray:
    t = c.row_sums().astype(np.float64)
    out = np.zeros(c.cells.shape, dtype=np.float64)
    populated = t > 0
    out[populated] = c.cells[populated] / t[populated, np.newaxis]
    return out


def most_confused(c: ConfusionMatrix, top: int = DEFAULT_TOP_CONFUSED) -> List[ConfusedPair]:
    """Pares (k1, k2), k1 != k2, con mayor confusabilidad; empates por índice."""
    if top < 0:
        raise ConvLensError(f"top no puede ser negativo: {top}")
    values = confusability(c)
    pairs = [
        (-values[i, j], i, j)
        for i in range(c.k) for j in range(c.k)
        if i != j and values[i, j] > 0
    ]
    pairs.sort()
    return [
        ConfusedPair(true_label=c.labels[i], predicted_label=c.labels[j], confusability=-v)
        for v, i, j in pairs[:top]
    ]


def metrics(c: ConfusionMatrix, epsilon: float = DEFAULT_SKEW_EPSILON,
            top: int = DEFAULT_TOP_CONFUSED) -> MetricsReport:
    """
    Calcula exactitud, exactitud media, sensibilidades, confusabilidad y el
    test de clases sesgadas.

    Args:
        c: Matriz de confusión válida
        epsilon: ε del test de sesgo, 0 <= ε < 1
        top: Número de pares más confundidos a listar

    Returns:
        MetricsReport

    Raises:
        ConvLensError: Si ε está fuera de rango
    """
    if not 0 <= epsilon < 1:
        raise ConvLensError(f"ε debe estar en [0, 1): {epsilon}")

    r = c.row_sums()
    acc = accuracy(c)
    empty = [c.labels[i] for i in np.flatnonzero(r == 0)]
    if empty:
        logger.warning("Clases sin muestras excluidas de la exactitud media: %s", ", ".join(empty))

    sensitivity: List[Optional[float]] = [
        float(c.cells[i, i] / r[i]) if r[i] > 0 else None for i in range(c.k)
    ]
    majority_share = float(r.max() / r.sum())
    skew = acc <= majority_share + epsilon
    if skew:
        logger.warning(
            "Exactitud %.4f cercana a la proporción de la clase mayoritaria %.4f: clases sesgadas",
            acc, majority_share,
        )

    return MetricsReport(
        labels=list(c.labels),
        accuracy=acc,
        error=error_rate(c),
        mean_accuracy=mean_accuracy(c),
        sensitivity=sensitivity,
        confusability=confusability(c).tolist(),
        skew_flag=bool(skew),
        epsilon=epsilon,
        most_confused=most_confused(c, top),
    )


# ==================== PÉRDIDA ====================

def cross_entropy_loss(outputs, targets, weights=(), lambda1: float = 0.0, lambda2: float = 0.0,
                       clamp_eps: float = DEFAULT_CLAMP_EPS) -> float:
    """
    Entropía cruzada con regularización ℓ1 y ℓ2.

    Las salidas se recortan a [clamp_eps, 1 - clamp_eps] antes del logaritmo.

    Raises:
        ConvLensError: λ negativo, clamp_eps fuera de (0, 0.5), conjunto vacío
            o formas distintas
    """
    if lambda1 < 0 or lambda2 < 0:
        raise ConvLensError(f"Los pesos de regularización no pueden ser negativos: {lambda1}, {lambda2}")
    if not 0 < clamp_eps < 0.5:
        raise ConvLensError(f"clamp_eps debe estar en (0, 0.5): {clamp_eps}")
    o = np.asarray(outputs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if o.size == 0:
        raise ConvLensError("El conjunto de salidas está vacío")
    if o.ndim != 2 or o.shape != t.shape:
        raise ConvLensError(f"Las formas no coinciden: salidas {o.shape}, objetivos {t.shape}")
    if not np.all((t == 0) | (t == 1)):
        raise ConvLensError("Los objetivos deben ser 0 o 1")

    o = np.clip(o, clamp_eps, 1.0 - clamp_eps)
    data_loss = -np.sum(t * np.log(o) + (1.0 - t) * np.log1p(-o))
    w = np.asarray(weights, dtype=np.float64).ravel()
    return float(data_loss + lambda1 * np.sum(np.abs(w)) + lambda2 * np.sum(w * w))


# ==================== LECTURA / ESCRITURA ====================

def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _csv_frame(text: str, what: str) -> pd.DataFrame:
    """
    Lee el CSV como texto sin cabecera; las filas cortas dejan huecos
    que se rechazan aquí.

    Raises:
        ConvLensError: CSV vacío, mal formado o con filas de distinta longitud
    """
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            header=None,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise ConvLensError(f"El CSV de {what} está vacío") from None
    except pd.errors.ParserError as exc:
        raise ConvLensError(f"CSV de {what} mal formado: {exc}") from None
    frame = frame.apply(lambda column: column.str.strip())
    holes = frame.isna() | (frame == "")
    if holes.to_numpy().any():
        row = int(np.flatnonzero(holes.to_numpy().any(axis=1))[0])
        raise ConvLensError(f"La fila {row} del CSV de {what} tiene campos vacíos o le faltan columnas")
    return frame


def parse_confusion(text: str) -> ConfusionMatrix:
    """
    Lee una matriz en CSV (cabecera opcional de etiquetas) o en JSON
    {"labels": [...], "matrix": [[...]]}.
    """
    if text.lstrip().startswith("{"):
        document = ConfusionMatrixFile.model_validate_json(text)
        return ConfusionMatrix(document.matrix, document.labels)

    frame = _csv_frame(text, "la matriz de confusión")
    labels = None
    if not _is_number(frame.iat[0, 0]):
        labels = frame.iloc[0].tolist()
        frame = frame.iloc[1:]
    try:
        cells = [[int(field) for field in row] for row in frame.to_numpy().tolist()]
    except ValueError as exc:
        raise ConvLensError(f"Conteo no entero en el CSV: {exc}") from None
    if any(len(row) != len(cells) for row in cells):
        raise ConvLensError("La matriz del CSV no es cuadrada")
    return ConfusionMatrix(cells, labels)


def read_confusion(path: Union[str, Path]) -> ConfusionMatrix:
    return parse_confusion(Path(path).read_text(encoding="utf-8"))


def confusion_to_json(c: ConfusionMatrix) -> str:
    return ConfusionMatrixFile(labels=list(c.labels), matrix=c.to_rows()).model_dump_json(indent=2)


def confusion_to_csv(c: ConfusionMatrix) -> str:
    frame = pd.DataFrame(c.to_rows(), columns=list(c.labels))
    return frame.to_csv(index=False, lineterminator="\n")


def parse_prediction_rows(text: str) -> np.ndarray:
    """CSV de N filas × K columnas numéricas; una cabecera no numérica se ignora."""
    frame = _csv_frame(text, "predicciones")
    if not _is_number(frame.iat[0, 0]):
        frame = frame.iloc[1:]
    if frame.empty:
        raise ConvLensError("El CSV de predicciones está vacío")
    try:
        return frame.to_numpy().astype(np.float64)
    except ValueError as exc:
        raise ConvLensError(f"Valor no numérico en el CSV: {exc}") from None


def read_prediction_rows(path: Union[str, Path]) -> np.ndarray:
    return parse_prediction_rows(Path(path).read_text(encoding="utf-8"))
