"""
schemas/ordering_schemas.py - ConvLens

Esquemas Pydantic para la ordenación de matrices de confusión.
"""

from pydantic import BaseModel, Field
from typing import List, Literal, Optional

from models.permutation import Permutation


# ==================== SCHEMAS DE RECOCIDO ====================

class AnnealSchedule(BaseModel):
    """Parámetros del recocido simulado"""
    steps: int = Field(..., ge=1, description="Pasos por cadena")
    t0: float = Field(..., gt=0, description="Temperatura inicial T")
    cooling: float = Field(..., gt=0, lt=1, description="Factor de enfriamiento c")
    restarts: int = Field(default=3, ge=1, description="Cadenas independientes")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Semilla de 64 bits")
    metropolis: Literal["best", "current"] = Field(
        default="best",
        description="Puntuación de referencia en el criterio de aceptación"
    )
    trace_every: int = Field(default=0, ge=0, description="Muestreo de la traza (0 = sin traza)")

    model_config = {
        "frozen": True,
        "json_schema_extra": {
            "examples": [
                {
                    "steps": 100000,
                    "t0": 12.5,
                    "cooling": 0.99993,
                    "restarts": 3,
                    "seed": 7,
                    "metropolis": "best",
                    "trace_every": 0
                }
            ]
        }
    }


class OrderingResult(BaseModel):
    """Permutación encontrada y su valor de la función objetivo"""
    order: List[int] = Field(..., description="order[p] = clase original en la posición p")
    objective: int = Field(..., ge=0, description="f(C) = Σ C_ij·|i-j| sobre la matriz permutada")
    initial_objective: int = Field(..., ge=0, description="f(C) con el orden de entrada")
    trace: Optional[List[int]] = Field(default=None, description="Mejor objetivo muestreado por paso")

    @property
    def permutation(self) -> Permutation:
        return Permutation(self.order)

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "order": [1, 0, 2],
                    "objective": 20,
                    "initial_objective": 30
                }
            ]
        }
    }
