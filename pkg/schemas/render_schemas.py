"""
schemas/render_schemas.py - ConvLens

Esquemas Pydantic para mapas de calor y troceado de matrices grandes.
"""

from pydantic import BaseModel, Field
from typing import List


class HeatmapOptions(BaseModel):
    """Opciones de dibujo de una matriz de confusión"""
    zero_diagonal: bool = Field(default=False, description="Pone la diagonal a 0")
    row_normalize: bool = Field(default=False, description="Divide cada fila por su suma")
    cell_px: int = Field(default=12, ge=1, le=200, description="Lado de cada celda en píxeles")
    show_labels: bool = Field(default=True, description="Dibuja los nombres de clase")
    log_scale: bool = Field(default=False, description="Aplica log1p antes de mapear a gris")

    model_config = {"frozen": True}


class TileReport(BaseModel):
    """Bloques consecutivos del orden y matrices necesarias para mostrarlos"""
    max_block: int = Field(..., ge=2)
    mass_threshold: int = Field(..., ge=0)
    blocks: List[List[int]] = Field(..., description="Rangos [inicio, fin] de posiciones")
    off_diagonal: List[List[int]] = Field(
        default_factory=list,
        description="Pares de bloques (fila, columna) con masa mayor que el umbral"
    )
    matrices: int = Field(..., ge=1, description="Bloques diagonales + pares fuera de la diagonal")
