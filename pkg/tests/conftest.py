"""
tests/conftest.py - ConvLens

Fixtures compartidas por la batería de pruebas.
"""

from pathlib import Path

import numpy as np
import pytest

from models.confusion import ConfusionMatrix
from services.config import get_settings

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def example3() -> ConfusionMatrix:
    """Matriz 3×3 con f(identidad) = 30 y óptimo 20."""
    return ConfusionMatrix([[0, 5, 1], [5, 0, 0], [9, 0, 0]], ["a", "b", "c"])


@pytest.fixture
def block_diagonal() -> ConfusionMatrix:
    return ConfusionMatrix([[9, 9, 0, 0], [9, 9, 0, 0], [0, 0, 9, 9], [0, 0, 9, 9]])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    """Cada prueba parte de la configuración por defecto."""
    for name in ("LOG_LEVEL", "NO_COLOR", "SEED", "SKEW_EPSILON", "ACT_COST", "CLAMP_EPS", "MAX_BLOCK"):
        monkeypatch.delenv(f"CONVLENS_{name}", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
