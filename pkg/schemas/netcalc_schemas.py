"""
schemas/netcalc_schemas.py - ConvLens

Esquemas Pydantic para los informes de coste de arquitecturas.
"""

from pydantic import BaseModel, Field, model_validator
from typing import List


# ==================== SCHEMAS DE COSTE ====================

class CostRow(BaseModel):
    """Coste de una capa"""
    name: str = Field(..., description="Nombre de la capa")
    kind: str = Field(..., description="Tipo de capa")
    shape: str = Field(..., description="Forma de salida")
    params: int = Field(..., ge=0, description="Parámetros aprendibles")
    flops: int = Field(..., ge=0, description="Operaciones en coma flotante")
    out_floats: int = Field(..., ge=0, description="Floats de la salida")
    receptive_field: int = Field(..., ge=1, description="Campo receptivo (lado)")


class CostReport(BaseModel):
    """Informe completo de parámetros, FLOPs y memoria"""
    rows: List[CostRow]
    total_params: int = Field(..., ge=0)
    total_flops: int = Field(..., ge=0)
    total_out_floats: int = Field(..., ge=0)
    batch: int = Field(default=1, ge=1, description="Tamaño del mini-batch m")
    bytes_per_value: int = Field(default=4, ge=1, description="Bytes por valor")
    optimizer_factor: int = Field(default=0, ge=0, description="Copias extra por peso del optimizador")

    @model_validator(mode="after")
    def _totals_match(self):
        if self.total_params != sum(r.params for r in self.rows):
            raise ValueError("total_params no coincide con la suma de filas")
        if self.total_flops != sum(r.flops for r in self.rows):
            raise ValueError("total_flops no coincide con la suma de filas")
        if self.total_out_floats != sum(r.out_floats for r in self.rows):
            raise ValueError("total_out_floats no coincide con la suma de filas")
        return self

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "rows": [
                        {"name": "input", "kind": "input", "shape": "1 @ 32×32", "params": 0,
                         "flops": 0, "out_floats": 1024, "receptive_field": 1},
                        {"name": "conv1", "kind": "conv", "shape": "6 @ 28×28", "params": 156,
                         "flops": 225792, "out_floats": 4704, "receptive_field": 5}
                    ],
                    "total_params": 156,
                    "total_flops": 225792,
                    "total_out_floats": 5728,
                    "batch": 1,
                    "bytes_per_value": 4,
                    "optimizer_factor": 0
                }
            ]
        }
    }


class MemoryFootprint(BaseModel):
    """Cotas de memoria para entrenamiento e inferencia"""
    training_bytes: int = Field(..., ge=0)
    inference_bytes: int = Field(..., ge=0)


class DenseBlockParams(BaseModel):
    """Parámetros de un bloque denso según las dos lecturas de la fórmula"""
    depth: int = Field(..., ge=1, description="L")
    growth: int = Field(..., ge=1, description="Tasa de crecimiento n")
    printed: int = Field(..., description="L + 9n + 9n²(L² - L)/2")
    summation: int = Field(..., description="L + 9n + 9n²·L(L + 1)/2")
