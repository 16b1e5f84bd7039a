"""
services/config.py - ConvLens

Configuración global leída del entorno (y de un fichero .env opcional).
"""

import logging
import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

# ==================== CONFIGURACIÓN ====================

ENV_PREFIX = "CONVLENS_"


class Settings(BaseModel):
    """Parámetros por defecto de la herramienta"""
    log_level: str = Field(default="WARNING", description="Nivel de logging")
    no_color: bool = Field(default=False, description="Desactiva los estilos ANSI en tablas")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Semilla por defecto")
    skew_epsilon: float = Field(default=0.01, ge=0, lt=1, description="ε del test de clases sesgadas")
    act_cost: int = Field(default=5, ge=0, description="FLOPs por evaluación de la activación")
    clamp_eps: float = Field(default=1e-7, gt=0, lt=0.5, description="Recorte de probabilidades en la entropía cruzada")
    max_block: int = Field(default=50, ge=2, description="Tamaño máximo de bloque al trocear matrices")

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Nivel de logging desconocido: {value}")
        return level


def _read_env() -> dict:
    values = {}
    for name in Settings.model_fields:
        raw = os.getenv(ENV_PREFIX + name.upper())
        if raw is None:
            continue
        if name == "no_color":
            # Cualquier valor no vacío desactiva el color (convención NO_COLOR)
            values[name] = raw.strip() != ""
        else:
            values[name] = raw
    return values


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """
    Carga la configuración una sola vez por proceso.

    Returns:
        Settings validados

    Raises:
        pydantic.ValidationError: Si alguna variable tiene un valor inválido
    """
    load_dotenv()
    return Settings(**_read_env())
