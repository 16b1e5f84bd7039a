"""
services/netarch_service.py - ConvLens

Lenguaje de descripción de arquitecturas (una capa por línea): análisis,
inferencia de formas, impresión canónica y campos receptivos.

Gramática:
    input C H W
    conv N KxK [/S] [same|valid] [nobias] [in=D]
    fc N [nobias]
    maxpool|avgpool KxK [/S] [same|valid]
    scaledavgpool KxK [/S]
    gap | bn | lcn | flatten
    act NAME
    dropout P
    dense L G

`#` inicia un comentario. El token `K` en lugar de N se sustituye por el
número de clases.
"""

import logging
import math
import re
from pathlib import Path
from typing import List, Optional, Tuple, Union

from models.layer import LAYER_KINDS, POOL_KINDS, ArchSpec, LayerSpec, Shape
from .errors import ConvLensError, ParseError

logger = logging.getLogger(__name__)

# ==================== CONFIGURACIÓN ====================

CLASS_TOKEN = "K"
_KERNEL_RE = re.compile(r"^(\d+)x(\d+)$")
_TOKEN_RE = re.compile(r"\S+")


# ==================== TOKENS ====================

class _Line:
    """Tokens de una línea con su columna (1-based)."""

    def __init__(self, number: int, text: str, source: Optional[str]):
        self.number = number
        self.source = source
        self.tokens: List[Tuple[str, int]] = [
            (m.group(0), m.start() + 1) for m in _TOKEN_RE.finditer(text)
        ]
        self.position = 1

    def error(self, message: str, column: Optional[int] = None) -> ParseError:
        if column is None:
            column = self.tokens[min(self.position, len(self.tokens) - 1)][1]
        return ParseError(message, self.number, column, self.source)

    def end_column(self) -> int:
        token, column = self.tokens[-1]
        return column + len(token)

    def next(self, what: str) -> Tuple[str, int]:
        if self.position >= len(self.tokens):
            raise self.error(f"Falta {what}", self.end_column())
        token = self.tokens[self.position]
        self.position += 1
        return token

    def peek(self) -> Optional[str]:
        if self.position < len(self.tokens):
            return self.tokens[self.position][0]
        return None

    def remaining(self) -> List[Tuple[str, int]]:
        rest = self.tokens[self.position:]
        self.position = len(self.tokens)
        return rest

    def expect_end(self):
        if self.position < len(self.tokens):
            token, column = self.tokens[self.position]
            raise self.error(f"Token inesperado '{token}'", column)


def _positive_int(line: _Line, what: str, classes: Optional[int]) -> int:
    token, column = line.next(what)
    if token == CLASS_TOKEN:
        if classes is None:
            raise line.error("El símbolo K necesita un número de clases (--classes)", column)
        return classes
    try:
        value = int(token)
    except ValueError:
        raise line.error(f"Se esperaba un entero para {what}, recibido '{token}'", column) from None
    if value < 1:
        raise line.error(f"{what} debe ser >= 1, recibido {value}", column)
    return value


def _kernel(line: _Line) -> Tuple[int, int]:
    token, column = line.next("el tamaño de kernel (KxK)")
    match = _KERNEL_RE.match(token)
    if not match:
        raise line.error(f"Kernel no válido '{token}', se esperaba KxK", column)
    kw, kh = int(match.group(1)), int(match.group(2))
    if kw < 1 or kh < 1:
        raise line.error(f"El kernel debe ser >= 1x1: '{token}'", column)
    return kw, kh


def _stride(line: _Line) -> Optional[int]:
    token = line.peek()
    if token is None or not token.startswith("/"):
        return None
    token, column = line.next("el stride")
    try:
        value = int(token[1:])
    except ValueError:
        raise line.error(f"Stride no válido '{token}'", column) from None
    if value < 1:
        raise line.error(f"El stride debe ser >= 1: '{token}'", column)
    return value


# ==================== ANÁLISIS POR TIPO DE CAPA ====================

def _parse_layer(line: _Line, classes: Optional[int]) -> LayerSpec:
    kind, column = line.tokens[0]
    if kind not in LAYER_KINDS:
        raise line.error(f"Tipo de capa desconocido '{kind}'", column)

    if kind == "input":
        channels = _positive_int(line, "los canales", classes)
        height = _positive_int(line, "el alto", classes)
        width = _positive_int(line, "el ancho", classes)
        line.expect_end()
        return LayerSpec(kind, filters=channels, input_size=(height, width), line=line.number)

    if kind == "conv":
        filters = _positive_int(line, "el número de filtros", classes)
        kernel = _kernel(line)
        stride = _stride(line) or 1
        padding, bias, override = "same", True, None
        for token, col in line.remaining():
            if token in ("same", "valid"):
                padding = token
            elif token == "nobias":
                bias = False
            elif token.startswith("in="):
                try:
                    override = int(token[3:])
                except ValueError:
                    raise line.error(f"Profundidad no válida '{token}'", col) from None
                if override < 1:
                    raise line.error(f"in= debe ser >= 1: '{token}'", col)
            else:
                raise line.error(f"Opción desconocida '{token}'", col)
        return LayerSpec(kind, filters=filters, kernel=kernel, stride=stride, padding=padding,
                         bias=bias, in_channels_override=override, line=line.number)

    if kind == "fc":
        filters = _positive_int(line, "el número de neuronas", classes)
        bias = True
        for token, col in line.remaining():
            if token != "nobias":
                raise line.error(f"Opción desconocida '{token}'", col)
            bias = False
        return LayerSpec(kind, filters=filters, bias=bias, line=line.number)

    if kind in POOL_KINDS:
        kernel = _kernel(line)
        stride = _stride(line) or kernel[0]
        padding = "valid"
        if kind != "scaledavgpool" and line.peek() in ("same", "valid"):
            padding = line.next("el padding")[0]
        line.expect_end()
        return LayerSpec(kind, kernel=kernel, stride=stride, padding=padding, line=line.number)

    if kind == "act":
        name, _ = line.next("el nombre de la activación")
        line.expect_end()
        return LayerSpec(kind, activation=name, line=line.number)

    if kind == "dropout":
        token, col = line.next("la probabilidad de dropout")
        try:
            rate = float(token)
        except ValueError:
            raise line.error(f"Probabilidad no válida '{token}'", col) from None
        if not 0 <= rate < 1:
            raise line.error(f"La probabilidad de dropout debe estar en [0, 1): {rate}", col)
        line.expect_end()
        return LayerSpec(kind, rate=rate, line=line.number)

    if kind == "dense":
        depth = _positive_int(line, "la profundidad L", classes)
        growth = _positive_int(line, "la tasa de crecimiento", classes)
        line.expect_end()
        return LayerSpec(kind, dense=(depth, growth), line=line.number)

    # gap, bn, lcn, flatten
    line.expect_end()
    return LayerSpec(kind, line=line.number)


# ==================== INFERENCIA DE FORMAS ====================

def _spatial(size: int, kernel: int, stride: int, padding: str, line: _Line, axis: str) -> int:
    if padding == "same":
        return math.ceil(size / stride)
    if kernel > size:
        raise line.error(f"Kernel {kernel} mayor que la entrada ({axis} = {size}) con padding valid", 1)
    return (size - kernel) // stride + 1


def _infer(layer: LayerSpec, previous: Shape, line: _Line) -> Shape:
    kind = layer.kind
    if kind == "conv" or kind in POOL_KINDS:
        kw, kh = layer.kernel
        height = _spatial(previous.height, kh, layer.stride, layer.padding, line, "alto")
        width = _spatial(previous.width, kw, layer.stride, layer.padding, line, "ancho")
        channels = layer.filters if kind == "conv" else previous.channels
        return Shape(channels, height, width)
    if kind == "fc":
        return Shape(layer.filters, 1, 1)
    if kind == "gap":
        return Shape(previous.channels, 1, 1)
    if kind == "flatten":
        return Shape(previous.floats, 1, 1)
    if kind == "dense":
        depth, growth = layer.dense
        return Shape(previous.channels + depth * growth, previous.height, previous.width)
    return previous


def parse_arch(text: str, classes: Optional[int] = None, source: Optional[str] = None) -> ArchSpec:
    """
    Analiza una arquitectura e infiere la forma de salida de cada capa.

    Args:
        text: Descripción en el lenguaje de arquitecturas
        classes: Valor del símbolo K, si el fichero lo usa
        source: Nombre del fichero para los mensajes de error

    Returns:
        ArchSpec con capas, formas y nombres

    Raises:
        ParseError: Sintaxis, tipo desconocido, capa antes de input o kernel
            mayor que la entrada con padding valid
    """
    if classes is not None and classes < 1:
        raise ConvLensError(f"El número de clases debe ser >= 1: {classes}")

    layers: List[LayerSpec] = []
    shapes: List[Shape] = []
    names: List[str] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        if not content.strip():
            continue
        line = _Line(number, content, source)
        layer = _parse_layer(line, classes)

        if layer.kind == "input":
            if layers:
                raise line.error("Solo puede haber una capa input y debe ser la primera", 1)
            height, width = layer.input_size
            shape = Shape(layer.filters, height, width)
            names.append("input")
        else:
            if not layers:
                raise line.error(f"La capa '{layer.kind}' aparece antes de input", 1)
            shape = _infer(layer, shapes[-1], line)
            names.append(f"{layer.kind}{len(layers)}")
        layers.append(layer)
        shapes.append(shape)
        logger.debug("Línea %d: %s -> %s", number, layer.kind, shape)

    if not layers:
        raise ParseError("La arquitectura está vacía (falta input)", 1, 1, source)
    return ArchSpec(tuple(layers), tuple(shapes), tuple(names))


def read_arch(path: Union[str, Path], classes: Optional[int] = None) -> ArchSpec:
    path = Path(path)
    return parse_arch(path.read_text(encoding="utf-8"), classes=classes, source=str(path))


# ==================== IMPRESIÓN Y CAMPOS RECEPTIVOS ====================

def _format_layer(layer: LayerSpec) -> str:
    kind = layer.kind
    if kind == "input":
        height, width = layer.input_size
        return f"input {layer.filters} {height} {width}"
    if kind == "conv":
        kw, kh = layer.kernel
        parts = [f"conv {layer.filters} {kw}x{kh} /{layer.stride} {layer.padding}"]
        if not layer.bias:
            parts.append("nobias")
        if layer.in_channels_override is not None:
            parts.append(f"in={layer.in_channels_override}")
        return " ".join(parts)
    if kind == "fc":
        return f"fc {layer.filters}" + ("" if layer.bias else " nobias")
    if kind == "scaledavgpool":
        kw, kh = layer.kernel
        return f"scaledavgpool {kw}x{kh} /{layer.stride}"
    if kind in POOL_KINDS:
        kw, kh = layer.kernel
        return f"{kind} {kw}x{kh} /{layer.stride} {layer.padding}"
    if kind == "act":
        return f"act {layer.activation}"
    if kind == "dropout":
        return f"dropout {layer.rate!r}"
    if kind == "dense":
        return f"dense {layer.dense[0]} {layer.dense[1]}"
    return kind


def format_arch(arch: ArchSpec) -> str:
    """Texto canónico; volver a analizarlo da la misma arquitectura."""
    return "".join(_format_layer(layer) + "\n" for layer in arch.layers)


def receptive_fields(arch: ArchSpec) -> List[int]:
    """
    Lado del campo receptivo de cada capa sobre la entrada.

    Dos convoluciones 3×3 apiladas ven 5×5. fc y gap ven todo el mapa de
    entrada.
    """
    fields = []
    field_size, jump = 1, 1
    for index, (layer, shape) in enumerate(zip(arch.layers, arch.shapes)):
        if index > 0:
            previous = arch.shapes[index - 1]
            if layer.kind == "conv" or layer.kind in POOL_KINDS:
                field_size += (max(layer.kernel) - 1) * jump
                jump *= layer.stride
            elif layer.kind in ("fc", "gap"):
                field_size += (max(previous.height, previous.width) - 1) * jump
            elif layer.kind == "dense":
                field_size += 2 * layer.dense[0] * jump
        fields.append(field_size)
    return fields
