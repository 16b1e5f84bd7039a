"""
models/layer.py - ConvLens

Descriptores de capa y arquitecturas secuenciales de CNN.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

LAYER_KINDS = (
    "input", "conv", "fc", "maxpool", "avgpool", "scaledavgpool", "gap",
    "bn", "act", "dropout", "dense", "lcn", "flatten",
)

POOL_KINDS = ("maxpool", "avgpool", "scaledavgpool")


@dataclass(frozen=True)
class Shape:
    """Forma (canales, alto, ancho) de la salida de una capa"""
    channels: int
    height: int
    width: int

    @property
    def floats(self) -> int:
        return self.channels * self.height * self.width

    def __str__(self) -> str:
        if self.height == 1 and self.width == 1:
            return f"{self.channels} @ 1×1"
        return f"{self.channels} @ {self.height}×{self.width}"


@dataclass(frozen=True)
class LayerSpec:
    """
    Una línea del lenguaje de arquitecturas.

    Solo los campos relevantes para `kind` tienen valor; el resto queda en None.
    """
    kind: str
    filters: Optional[int] = None          # conv / fc (n); input (C)
    kernel: Optional[Tuple[int, int]] = None  # (k_w, k_h)
    stride: Optional[int] = None
    padding: Optional[str] = None          # "same" | "valid"
    bias: bool = True
    in_channels_override: Optional[int] = None
    rate: Optional[float] = None           # dropout p
    activation: Optional[str] = None
    dense: Optional[Tuple[int, int]] = None  # (L, growth)
    input_size: Optional[Tuple[int, int]] = None  # input (H, W)
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ArchSpec:
    """
    Arquitectura secuencial: capas y formas inferidas.

    Atributos:
        layers: Capas en orden, la primera es `input`
        shapes: shapes[i] es la forma de salida de layers[i]
        names: Nombre legible por capa (p. ej. "conv1", "bn2")
    """
    layers: Tuple[LayerSpec, ...]
    shapes: Tuple[Shape, ...]
    names: Tuple[str, ...]

    def input_shape(self, index: int) -> Shape:
        """Forma de entrada de la capa `index` (la salida de la anterior)"""
        return self.shapes[index - 1] if index > 0 else self.shapes[0]

    def __len__(self) -> int:
        return len(self.layers)

    def rows(self) -> List[Tuple[str, LayerSpec, Shape]]:
        return list(zip(self.names, self.layers, self.shapes))
