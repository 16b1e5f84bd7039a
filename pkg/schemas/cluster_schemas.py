"""
schemas/cluster_schemas.py - ConvLens

Esquemas Pydantic para clusters de clases.
"""

from pydantic import BaseModel, Field, RootModel
from typing import Dict, List


# ==================== SCHEMAS DE CLUSTERS ====================

class ClusterPlanRead(BaseModel):
    """Cortes de una matriz ordenada con un umbral"""
    order: List[int] = Field(..., description="Orden de visualización")
    strengths: List[int] = Field(..., description="a_i = C'[i,i+1] + C'[i+1,i]")
    threshold: int = Field(..., ge=0, description="Umbral θ")
    clusters: List[List[int]] = Field(..., description="Rangos [inicio, fin] de posiciones")
    groups: List[List[str]] = Field(..., description="Nombres de clase por cluster")

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "order": [0, 1, 2, 3],
                    "strengths": [18, 0, 18],
                    "threshold": 1,
                    "clusters": [[0, 1], [2, 3]],
                    "groups": [["0", "1"], ["2", "3"]]
                }
            ]
        }
    }


class ClusterErrorRow(BaseModel):
    """Error de un grupo grueso"""
    group: str = Field(..., description="Nombre del grupo grueso")
    touched: int = Field(..., ge=1, description="n: clusters candidatos que lo tocan")
    intruders: List[str] = Field(..., description="M⁻: clases ajenas dentro de esos clusters")
    error: int = Field(..., ge=0, description="(n - 1) + |M⁻|")


class ClusterErrorReport(BaseModel):
    """Errores por grupo y total"""
    rows: List[ClusterErrorRow]
    total: int = Field(..., ge=0)


class NamedClusteringFile(RootModel[Dict[str, List[str]]]):
    """Agrupación con nombre: {"fish": ["trout", ...], ...}"""


class ClusteringFile(RootModel[List[List[str]]]):
    """Agrupación sin nombres: [["trout", "shark"], ["rose"], ...]"""
