"""
schemas/confusion_schemas.py - ConvLens

Esquemas Pydantic para matrices de confusión y sus métricas.
"""

from pydantic import BaseModel, Field, model_validator
from typing import List, Optional


# ==================== SCHEMAS DE MATRIZ ====================

class ConfusionMatrixFile(BaseModel):
    """Formato JSON de una matriz de confusión"""
    labels: List[str] = Field(..., min_length=2, description="Nombres de clase en orden")
    matrix: List[List[int]] = Field(..., description="Conteos: filas = clase real, columnas = predicha")

    @model_validator(mode="after")
    def _square(self):
        k = len(self.labels)
        if len(self.matrix) != k or any(len(row) != k for row in self.matrix):
            raise ValueError(f"La matriz debe ser {k}×{k} para {k} etiquetas")
        return self

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "labels": ["cat", "dog"],
                    "matrix": [[40, 10], [20, 30]]
                }
            ]
        }
    }


# ==================== SCHEMAS DE MÉTRICAS ====================

class ConfusedPair(BaseModel):
    """Par de clases con alta confusión"""
    true_label: str = Field(..., description="Clase real k1")
    predicted_label: str = Field(..., description="Clase predicha k2")
    confusability: float = Field(..., ge=0, le=1, description="c[k1,k2] / r(k1)")


class MetricsReport(BaseModel):
    """Métricas de calidad derivadas de la matriz de confusión"""
    labels: List[str] = Field(..., description="Nombres de clase")
    accuracy: float = Field(..., ge=0, le=1, description="Σ c_ii / Σ c_ij")
    error: float = Field(..., ge=0, le=1, description="1 - accuracy")
    mean_accuracy: float = Field(..., ge=0, le=1, description="Media de c_ii / t_i sobre clases con muestras")
    sensitivity: List[Optional[float]] = Field(..., description="s(k) = c_kk / r(k); null si r(k) = 0")
    confusability: List[List[float]] = Field(..., description="c[k1,k2] / r(k1); fila de ceros si r(k1) = 0")
    skew_flag: bool = Field(..., description="accuracy <= max r(i) / Σ r(i) + ε")
    epsilon: float = Field(..., ge=0, lt=1, description="ε usado en el test de sesgo")
    most_confused: List[ConfusedPair] = Field(default=[], description="Pares fuera de la diagonal más confundidos")

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "labels": ["0", "1"],
                    "accuracy": 0.7,
                    "error": 0.3,
                    "mean_accuracy": 0.7,
                    "sensitivity": [0.8, 0.6],
                    "confusability": [[0.8, 0.2], [0.4, 0.6]],
                    "skew_flag": False,
                    "epsilon": 0.0,
                    "most_confused": [
                        {"true_label": "1", "predicted_label": "0", "confusability": 0.4}
                    ]
                }
            ]
        }
    }


class LossReport(BaseModel):
    """Resultado de la entropía cruzada regularizada"""
    loss: float = Field(..., ge=0, description="E_CE total")
    samples: int = Field(..., ge=1, description="Número de muestras")
    lambda1: float = Field(..., ge=0)
    lambda2: float = Field(..., ge=0)
