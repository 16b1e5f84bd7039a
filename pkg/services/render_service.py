"""
services/render_service.py - ConvLens

Mapas de calor SVG deterministas de matrices de confusión y troceado
en bloques diagonales para K grande.
"""

import io
import logging
import math

import numpy as np
import svgwrite

from models.confusion import ConfusionMatrix
from models.permutation import Permutation
from schemas.render_schemas import HeatmapOptions, TileReport
from .errors import ConvLensError

logger = logging.getLogger(__name__)

# ==================== CONFIGURACIÓN ====================

LABEL_CHAR_PX = 0.6
LABEL_GAP_PX = 4
MAX_FONT_PX = 12


def _px(value: float) -> str:
    return f"{value:.2f}"


def _gray(intensity: int) -> str:
    return "#{0:02x}{0:02x}{0:02x}".format(intensity)


def displayed_values(c: ConfusionMatrix, order: Permutation, options: HeatmapOptions) -> np.ndarray:
    """Valores que se dibujan: permutados, normalizados, sin diagonal y en log1p según opciones."""
    if len(order) != c.k:
        raise ConvLensError(f"La permutación tiene {len(order)} posiciones para {c.k} clases")
    index = order.as_array()
    values = c.cells[np.ix_(index, index)].astype(np.float64)
    if options.row_normalize:
        sums = values.sum(axis=1)
        populated = sums > 0
        values[populated] /= sums[populated, np.newaxis]
    if options.zero_diagonal:
        np.fill_diagonal(values, 0.0)
    if options.log_scale:
        values = np.log1p(values)
    return values


def heatmap(c: ConfusionMatrix, order: Permutation, options: HeatmapOptions = HeatmapOptions()) -> bytes:
    """
    Dibuja la matriz K×K como rejilla de grises.

    Cada valor v se pinta con intensidad round(255·(1 - v/v_max)): blanco
    para 0 y negro para el máximo mostrado. Con v_max = 0 todo queda en
    blanco y se emite un aviso.

    Args:
        c: Matriz de confusión
        order: Orden de filas y columnas
        options: HeatmapOptions

    Returns:
        Documento SVG 1.1 en UTF-8, idéntico byte a byte para la misma entrada
    """
    values = displayed_values(c, order, options)
    v_max = float(values.max())
    if v_max <= 0:
        logger.warning("La matriz mostrada está vacía: el mapa de calor queda en blanco")

    cell = options.cell_px
    labels = [c.labels[i] for i in order.order]
    font = min(cell, MAX_FONT_PX)
    margin = 0.0
    if options.show_labels:
        margin = max(len(label) for label in labels) * font * LABEL_CHAR_PX + 2 * LABEL_GAP_PX
    side = margin + cell * c.k

    drawing = svgwrite.Drawing(size=(_px(side), _px(side)), profile="full", debug=False)
    drawing.add(drawing.rect(insert=("0.00", "0.00"), size=(_px(side), _px(side)), fill="#ffffff"))

    grid = drawing.g(id="cells", stroke="none")
    for row in range(c.k):
        for column in range(c.k):
            value = float(values[row, column])
            intensity = 255 if v_max <= 0 else int(round(255 * (1 - value / v_max)))
            rect = drawing.rect(
                insert=(_px(margin + column * cell), _px(margin + row * cell)),
                size=(_px(cell), _px(cell)),
                fill=_gray(intensity),
            )
            rect.set_desc(title=f"{labels[row]} -> {labels[column]}: {c.cells[order.order[row], order.order[column]]}")
            grid.add(rect)
    drawing.add(grid)

    if options.show_labels:
        text = drawing.g(id="labels", font_size=_px(font), font_family="monospace")
        for position, label in enumerate(labels):
            center = margin + (position + 0.5) * cell
            text.add(drawing.text(label, insert=(_px(margin - LABEL_GAP_PX), _px(center)),
                                  text_anchor="end", dominant_baseline="middle"))
            column_label = drawing.text(label, insert=(_px(center), _px(margin - LABEL_GAP_PX)),
                                        text_anchor="start", dominant_baseline="middle")
            column_label.rotate(-90, center=(round(center, 2), round(margin - LABEL_GAP_PX, 2)))
            text.add(column_label)
        drawing.add(text)

    buffer = io.StringIO()
    drawing.write(buffer, pretty=False)
    return buffer.getvalue().encode("utf-8")


# ==================== TROCEADO ====================

def tile_blocks(c: ConfusionMatrix, order: Permutation, max_block: int, mass_threshold: int = 0) -> TileReport:
    """
    Parte el orden en bloques consecutivos de como mucho `max_block` clases.

    Hacen falta los bloques diagonales más cada par (fila, columna) de
    bloques distintos cuya masa de confusión supere `mass_threshold`.
    """
    if max_block < 2:
        raise ConvLensError(f"max_block debe ser >= 2: {max_block}")
    if mass_threshold < 0:
        raise ConvLensError(f"El umbral de masa no puede ser negativo: {mass_threshold}")
    if len(order) != c.k:
        raise ConvLensError(f"La permutación tiene {len(order)} posiciones para {c.k} clases")

    index = order.as_array()
    ordered = c.cells[np.ix_(index, index)]
    count = math.ceil(c.k / max_block)
    blocks = [[b * max_block, min((b + 1) * max_block, c.k) - 1] for b in range(count)]

    off_diagonal = []
    for a, (a0, a1) in enumerate(blocks):
        for b, (b0, b1) in enumerate(blocks):
            if a != b and int(ordered[a0:a1 + 1, b0:b1 + 1].sum()) > mass_threshold:
                off_diagonal.append([a, b])

    logger.debug("%d bloques, %d pares fuera de la diagonal", count, len(off_diagonal))
    return TileReport(max_block=max_block, mass_threshold=mass_threshold, blocks=blocks,
                      off_diagonal=off_diagonal, matrices=count + len(off_diagonal))
