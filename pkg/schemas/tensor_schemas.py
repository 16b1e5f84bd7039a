"""
schemas/tensor_schemas.py - ConvLens

Esquemas Pydantic para el contenedor de tensores y los informes de
filtros y pesos.
"""

import math

from pydantic import BaseModel, Field, RootModel, model_validator
from typing import List, Optional


# ==================== SCHEMAS DE TENSOR ====================

class TensorRecord(BaseModel):
    """Tensor con nombre, forma y valores en orden row-major"""
    name: str = Field(..., description="Nombre del tensor")
    shape: List[int] = Field(..., min_length=1, description="Dimensiones")
    values: List[float] = Field(..., description="Valores aplanados (row-major)")

    @model_validator(mode="after")
    def _size_matches(self):
        if any(d < 1 for d in self.shape):
            raise ValueError(f"Dimensiones no válidas en '{self.name}': {self.shape}")
        if len(self.values) != math.prod(self.shape):
            raise ValueError(
                f"El tensor '{self.name}' declara forma {self.shape} "
                f"pero tiene {len(self.values)} valores"
            )
        return self

    model_config = {
        "json_schema_extra": {
            "examples": [
                {"name": "conv1/filter0", "shape": [2, 2, 1], "values": [0.1, -0.2, 0.3, 0.0]}
            ]
        }
    }


class TensorFile(RootModel[List[TensorRecord]]):
    """Un fichero con varios tensores"""


# ==================== SCHEMAS DE INFORMES ====================

class CorrelationReport(BaseModel):
    """Correlación por traslación de un conjunto de filtros"""
    k: int = Field(..., ge=1)
    filters: int = Field(..., ge=1, description="Número de filtros")
    value: float = Field(..., ge=-1, le=1, description="ρ_k del par o ρ̄_k de la capa")
    pair: Optional[List[str]] = Field(default=None, description="Filtros comparados, si es un par")


class UpdateStat(BaseModel):
    """Estadísticas de |Δw| de una capa entre dos épocas consecutivas"""
    layer: str
    from_epoch: int = Field(..., ge=0)
    to_epoch: int = Field(..., ge=1)
    mean: float = Field(..., ge=0)
    max: float = Field(..., ge=0)
    sum: float = Field(..., ge=0)


class ActivationValue(BaseModel):
    name: str
    x: float
    value: float
    derivative: float


class ActivationInfo(BaseModel):
    """Propiedades teóricas de una función de activación"""
    name: str
    value_range: str = Field(..., description="Rango de valores")
    vanishing_gradient: bool
    negative_activation: bool
    bound_activation: str = Field(..., description="'yes', 'no' o 'half-sided'")
