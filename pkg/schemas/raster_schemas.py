"""
schemas/raster_schemas.py - ConvLens

Esquemas Pydantic para los recortes de datasets.
"""

from pydantic import BaseModel, Field
from typing import List, Optional


class CropRecord(BaseModel):
    """Un recorte aceptado"""
    index: int = Field(..., ge=0, description="Número de sorteo")
    x: int = Field(..., ge=0, description="Columna izquierda")
    y: int = Field(..., ge=0, description="Fila superior")
    majority_class: int = Field(..., ge=0, description="Clase mayoritaria del recorte de etiquetas")
    coverage: float = Field(..., ge=0, le=1, description="Fracción cubierta por la clase mayoritaria")
    image_file: Optional[str] = Field(default=None, description="Fichero del recorte de imagen")
    label_file: Optional[str] = Field(default=None, description="Fichero del recorte de etiquetas")


class CropManifest(BaseModel):
    """Resumen de una extracción de recortes"""
    width: int = Field(..., ge=1)
    height: int = Field(..., ge=1)
    draws: int = Field(..., ge=0)
    majority: float = Field(..., ge=0.5, le=1)
    seed: int = Field(..., ge=0)
    samples: List[CropRecord]
