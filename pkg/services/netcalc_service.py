"""
services/netcalc_service.py - ConvLens

Parámetros, FLOPs, floats de activación y memoria por capa de una
arquitectura secuencial.
"""

import logging
from typing import List

from models.layer import ArchSpec, LayerSpec, Shape
from schemas.netcalc_schemas import CostReport, CostRow, DenseBlockParams, MemoryFootprint
from .errors import ConvLensError
from .netarch_service import receptive_fields

logger = logging.getLogger(__name__)

# ==================== CONFIGURACIÓN ====================

DEFAULT_ACT_COST = 5
POOL_COST = 5
SCALEDAVGPOOL_PARAMS = 2
DENSE_KERNEL_AREA = 9
OPTIMIZER_FACTORS = {"sgd": 0, "adam": 2}

_BOLD = "\033[1m"
_RESET = "\033[0m"


# ==================== PARÁMETROS ====================

def dense_block_params(depth: int, growth: int) -> DenseBlockParams:
    """
    Parámetros de un bloque denso de L capas 3×3 con tasa de crecimiento n.

    Devuelve las dos lecturas: la forma cerrada impresa
    L + 9n + 9n²(L² - L)/2 y la suma explícita L + 9n + 9n²·L(L + 1)/2.

    Raises:
        ConvLensError: Si L < 1 o n < 1
    """
    if depth < 1 or growth < 1:
        raise ConvLensError(f"L y n deben ser >= 1: L={depth}, n={growth}")
    base = depth + DENSE_KERNEL_AREA * growth
    square = DENSE_KERNEL_AREA * growth * growth
    return DenseBlockParams(
        depth=depth,
        growth=growth,
        printed=base + square * (depth * depth - depth) // 2,
        summation=base + square * depth * (depth + 1) // 2,
    )


def _layer_params(layer: LayerSpec, previous: Shape, shape: Shape) -> int:
    kind = layer.kind
    bias = 1 if layer.bias else 0
    if kind == "conv":
        depth = layer.in_channels_override or previous.channels
        kw, kh = layer.kernel
        return layer.filters * (depth * kw * kh + bias)
    if kind == "fc":
        return layer.filters * (previous.floats + bias)
    if kind == "bn":
        return 2 * shape.channels
    if kind == "scaledavgpool":
        return SCALEDAVGPOOL_PARAMS
    if kind == "dense":
        return dense_block_params(*layer.dense).printed
    return 0


def count_params(arch: ArchSpec) -> List[int]:
    """Parámetros por capa (la capa input cuenta 0)."""
    return [
        _layer_params(layer, arch.input_shape(i), shape)
        for i, (layer, shape) in enumerate(zip(arch.layers, arch.shapes))
    ]


# ==================== FLOPs ====================

def _layer_flops(layer: LayerSpec, previous: Shape, shape: Shape, params: int, act_cost: int) -> int:
    kind = layer.kind
    if kind == "conv":
        depth = layer.in_channels_override or previous.channels
        kw, kh = layer.kernel
        return (2 * kw * kh * depth - 1) * layer.filters * shape.width * shape.height
    if kind == "fc":
        return 2 * layer.filters * previous.floats
    if kind == "act":
        return act_cost * shape.floats
    if kind == "bn":
        return params
    if kind in ("maxpool", "avgpool", "scaledavgpool"):
        applications = previous.width * previous.height * previous.channels // (layer.stride ** 2)
        return applications * POOL_COST
    if kind == "gap":
        return shape.channels
    if kind == "dense":
        depth, growth = layer.dense
        area = previous.width * previous.height
        return sum(
            (2 * DENSE_KERNEL_AREA * (previous.channels + l * growth) - 1) * growth * area
            for l in range(depth)
        )
    return 0


def count_flops(arch: ArchSpec, act_cost: int = DEFAULT_ACT_COST) -> List[int]:
    """
    FLOPs por capa.

    conv = (2·k_w·k_h·d - 1)·n·w·h, fc = 2·n·k, act = n_φ por elemento,
    bn = sus parámetros, pooling = aplicaciones × 5, gap = canales.
    """
    if act_cost < 0:
        raise ConvLensError(f"El coste de activación no puede ser negativo: {act_cost}")
    params = count_params(arch)
    return [
        _layer_flops(layer, arch.input_shape(i), shape, params[i], act_cost)
        for i, (layer, shape) in enumerate(zip(arch.layers, arch.shapes))
    ]


# ==================== MEMORIA ====================

def memory_footprint(arch: ArchSpec, batch: int = 1, bytes_per_value: int = 4,
                     optimizer_factor: int = 0) -> MemoryFootprint:
    """
    Cotas de memoria.

    Entrenamiento: todas las salidas del mini-batch más los pesos y las
    copias del optimizador. Inferencia: el mayor par de capas consecutivas
    más los pesos.
    """
    if batch < 1:
        raise ConvLensError(f"El mini-batch debe ser >= 1: {batch}")
    if bytes_per_value < 1:
        raise ConvLensError(f"Bytes por valor debe ser >= 1: {bytes_per_value}")
    if optimizer_factor < 0:
        raise ConvLensError(f"El factor del optimizador no puede ser negativo: {optimizer_factor}")

    params = sum(count_params(arch))
    outs = [shape.floats for shape in arch.shapes]
    activations = sum(outs[1:])
    pairs = [a + b for a, b in zip(outs, outs[1:])] or [outs[0]]
    return MemoryFootprint(
        training_bytes=bytes_per_value * (batch * activations + params * (1 + optimizer_factor)),
        inference_bytes=bytes_per_value * (max(pairs) + params),
    )


# ==================== INFORME ====================

def build_report(arch: ArchSpec, act_cost: int = DEFAULT_ACT_COST, batch: int = 1,
                 bytes_per_value: int = 4, optimizer_factor: int = 0) -> CostReport:
    """
    Informe por capa con parámetros, FLOPs, floats de salida y campo receptivo.

    Args:
        arch: Arquitectura con formas inferidas
        act_cost: FLOPs por evaluación de la activación (n_φ)
        batch: Tamaño del mini-batch m
        bytes_per_value: Bytes por valor almacenado
        optimizer_factor: 0 para SGD, 2 para Adam

    Returns:
        CostReport con totales verificados
    """
    params = count_params(arch)
    flops = count_flops(arch, act_cost)
    fields = receptive_fields(arch)
    rows = [
        CostRow(
            name=name,
            kind=layer.kind,
            shape=str(shape),
            params=params[i],
            flops=flops[i],
            out_floats=shape.floats,
            receptive_field=fields[i],
        )
        for i, (name, layer, shape) in enumerate(arch.rows())
    ]
    logger.debug("Informe de %d capas: %d parámetros", len(rows), sum(params))
    return CostReport(
        rows=rows,
        total_params=sum(params),
        total_flops=sum(flops),
        total_out_floats=sum(r.out_floats for r in rows),
        batch=batch,
        bytes_per_value=bytes_per_value,
        optimizer_factor=optimizer_factor,
    )


def _grouped(value: int) -> str:
    return f"{value:,}".replace(",", " ")


def format_table(report: CostReport, memory: MemoryFootprint, no_color: bool = False) -> str:
    """Tabla alineada por columnas, con fila Σ y las cotas de memoria."""
    header = ("Capa", "Tipo", "Salida", "Parámetros", "FLOPs", "Floats", "CR")
    body = [
        (r.name, r.kind, r.shape, _grouped(r.params), _grouped(r.flops),
         _grouped(r.out_floats), str(r.receptive_field))
        for r in report.rows
    ]
    total = ("Σ", "", "", _grouped(report.total_params), _grouped(report.total_flops),
             _grouped(report.total_out_floats), "")
    table = [header] + body + [total]
    widths = [max(len(row[c]) for row in table) for c in range(len(header))]

    def render(row) -> str:
        cells = [row[c].ljust(widths[c]) if c < 3 else row[c].rjust(widths[c]) for c in range(len(row))]
        return "  ".join(cells).rstrip()

    title = render(header)
    if not no_color:
        title = f"{_BOLD}{title}{_RESET}"
    lines = [title, "-" * len(render(header))]
    lines += [render(row) for row in body]
    lines += ["-" * len(render(header)), render(total), ""]
    lines.append(
        f"Memoria (m={report.batch}, {report.bytes_per_value} B/valor, "
        f"factor optimizador {report.optimizer_factor}): "
        f"entrenamiento {_grouped(memory.training_bytes)} B, "
        f"inferencia {_grouped(memory.inference_bytes)} B"
    )
    return "\n".join(lines) + "\n"
