"""
services/datagen_service.py - ConvLens

Utilidades de rasters: filtrado lineal con cuatro modos de borde,
pooling, extracción de recortes de un dataset de segmentación y el
códec Netpbm (PGM/PPM).
"""

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from models.raster import Raster
from models.tensor import FilterTensor
from .errors import ConvLensError
from .random_stream import SplitMix64

logger = logging.getLogger(__name__)

# ==================== CONFIGURACIÓN ====================

BOUNDARY_MODES = ("dont_compute", "zero", "nearest", "reflect")
_PAD_MODES = {"zero": "constant", "nearest": "edge", "reflect": "symmetric"}
POOL_TYPES = ("max", "avg", "l2")
NETPBM_MAXVAL = 65535


# ==================== FILTRADO ====================

def filter2d(image: Raster, kernel: FilterTensor, boundary: str = "zero") -> Raster:
    """
    I'(x, y) = Σ I(x + i_x, y + i_y, i_c)·F(i_x, i_y, i_c), con desplazamientos
    de 1 - ceil(k/2) a floor(k/2) en cada eje.

    Args:
        image: Raster de w×h×d
        kernel: Filtro k_w×k_h×d (primer eje = ancho)
        boundary: dont_compute, zero, nearest o reflect

    Returns:
        Raster de un canal; dont_compute lo reduce a (w-k_w+1)×(h-k_h+1)

    Raises:
        ConvLensError: Modo desconocido, profundidad distinta o kernel mayor
            que la imagen con dont_compute
    """
    if boundary not in BOUNDARY_MODES:
        raise ConvLensError(f"Modo de borde desconocido '{boundary}'. Opciones: {', '.join(BOUNDARY_MODES)}")
    kw, kh, depth = kernel.dims
    if depth != image.channels:
        raise ConvLensError(f"El kernel tiene profundidad {depth} y la imagen {image.channels} canales")

    values = image.values
    if boundary == "dont_compute":
        if kw > image.width or kh > image.height:
            raise ConvLensError(f"Kernel {kw}×{kh} mayor que la imagen {image.width}×{image.height}")
        padded = values
        out_h, out_w = image.height - kh + 1, image.width - kw + 1
    else:
        pad_y = (math.ceil(kh / 2) - 1, kh // 2)
        pad_x = (math.ceil(kw / 2) - 1, kw // 2)
        padded = np.pad(values, (pad_y, pad_x, (0, 0)), mode=_PAD_MODES[boundary])
        out_h, out_w = image.height, image.width

    out = np.zeros((out_h, out_w), dtype=np.float64)
    for jx in range(kw):
        for jy in range(kh):
            window = padded[jy:jy + out_h, jx:jx + out_w, :]
            out += window @ kernel.values[jx, jy, :]
    return Raster(out)


def pool2d(image: Raster, size: int, stride: int, kind: str = "max") -> Raster:
    """Pooling p×p con stride s en posiciones válidas, canal a canal."""
    if kind not in POOL_TYPES:
        raise ConvLensError(f"Tipo de pooling desconocido '{kind}'. Opciones: {', '.join(POOL_TYPES)}")
    if size < 1 or stride < 1:
        raise ConvLensError(f"Tamaño y stride deben ser >= 1: p={size}, s={stride}")
    if size > image.width or size > image.height:
        raise ConvLensError(f"Ventana {size}×{size} mayor que la imagen {image.width}×{image.height}")

    windows = sliding_window_view(image.values, (size, size), axis=(0, 1))[::stride, ::stride]
    if kind == "max":
        pooled = windows.max(axis=(-2, -1))
    elif kind == "avg":
        pooled = windows.mean(axis=(-2, -1))
    else:
        pooled = np.sqrt(np.sum(windows * windows, axis=(-2, -1)))
    return Raster(pooled)


def avgpool_kernel(size: int, channels: int, channel: int) -> FilterTensor:
    """Filtro p×p×d que reproduce el average pooling del canal indicado."""
    if size < 1:
        raise ConvLensError(f"El tamaño debe ser >= 1: {size}")
    if not 0 <= channel < channels:
        raise ConvLensError(f"Canal {channel} fuera de rango para {channels} canales")
    values = np.zeros((size, size, channels), dtype=np.float64)
    values[:, :, channel] = 1.0 / (size * size)
    return FilterTensor(values, name=f"avgpool{size}/c{channel}")


# ==================== RECORTES ====================

@dataclass(frozen=True)
class CropSample:
    """Un recorte aceptado: posición, clase mayoritaria y los dos parches"""
    index: int
    x: int
    y: int
    majority_class: int
    coverage: float
    image: Raster
    labels: Raster


def crop_dataset(image: Raster, labels: Raster, width: int, height: int, count: int,
                 majority: float, seed: int) -> List[CropSample]:
    """
    Convierte un dataset de segmentación en uno de clasificación.

    Se sortean `count` posiciones x ∈ [0, W - w], y ∈ [0, H - h] (ambos
    extremos incluidos) y se acepta el recorte si alguna clase cubre al
    menos `majority` del parche de etiquetas. Empates a la clase de menor id.

    Raises:
        ConvLensError: Recorte mayor que el raster, dimensiones distintas o
            majority fuera de [0.5, 1]
    """
    if not labels.is_label:
        raise ConvLensError("El raster de etiquetas debe ser de tipo etiqueta")
    if (image.width, image.height) != (labels.width, labels.height):
        raise ConvLensError(
            f"Imagen {image.width}×{image.height} y etiquetas {labels.width}×{labels.height} no coinciden"
        )
    if width < 1 or height < 1 or width > image.width or height > image.height:
        raise ConvLensError(f"Recorte {width}×{height} no cabe en {image.width}×{image.height}")
    if not 0.5 <= majority <= 1:
        raise ConvLensError(f"majority debe estar en [0.5, 1]: {majority}")
    if count < 0:
        raise ConvLensError(f"count no puede ser negativo: {count}")

    rng = SplitMix64(seed)
    area = width * height
    samples = []
    for index in range(count):
        x = rng.randint_inclusive(0, image.width - width)
        y = rng.randint_inclusive(0, image.height - height)
        patch = labels.crop(x, y, width, height)
        counts = np.bincount(patch.values.ravel())
        winner = int(np.argmax(counts))
        coverage = counts[winner] / area
        if coverage >= majority:
            samples.append(CropSample(index, x, y, winner, float(coverage),
                                      image.crop(x, y, width, height), patch))

    logger.debug("Recortes: %d aceptados de %d sorteos", len(samples), count)
    return samples


# ==================== NETPBM ====================

_MAGIC = {"P2": (1, False), "P5": (1, True), "P3": (3, False), "P6": (3, True)}
_HEADER_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def parse_netpbm(data: bytes, is_label: bool = False) -> Raster:
    """
    Decodifica P2/P5 (grises) y P3/P6 (color) con maxval <= 65535.
    Las muestras binarias de 16 bits son big-endian.
    """
    tokens = []
    position = 0
    while len(tokens) < 4:
        match = _HEADER_TOKEN.match(data, position)
        if not match:
            raise ConvLensError("Cabecera Netpbm incompleta")
        tokens.append(match.group(1).decode("ascii", errors="replace"))
        position = match.end()

    magic = tokens[0]
    if magic not in _MAGIC:
        raise ConvLensError(f"Formato Netpbm no soportado: {magic}")
    channels, binary = _MAGIC[magic]
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ConvLensError(f"Cabecera Netpbm no válida: {' '.join(tokens)}") from None
    if width < 1 or height < 1 or not 1 <= maxval <= NETPBM_MAXVAL:
        raise ConvLensError(f"Dimensiones o maxval no válidos: {width}×{height}, {maxval}")

    samples = width * height * channels
    if binary:
        body = data[position + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(body) < samples * dtype.itemsize:
            raise ConvLensError("Faltan muestras en el fichero Netpbm")
        values = np.frombuffer(body, dtype=dtype, count=samples).astype(np.int64)
    else:
        fields = re.sub(rb"#[^\n]*", b"", data[position:]).split()
        if len(fields) < samples:
            raise ConvLensError("Faltan muestras en el fichero Netpbm")
        values = np.array([int(f) for f in fields[:samples]], dtype=np.int64)
    if np.any(values > maxval):
        raise ConvLensError(f"Muestra mayor que maxval ({maxval})")
    return Raster(values.reshape(height, width, channels), is_label=is_label)


def read_netpbm(path: Union[str, Path], is_label: bool = False) -> Raster:
    return parse_netpbm(Path(path).read_bytes(), is_label=is_label)


def encode_netpbm(raster: Raster, binary: bool = True) -> bytes:
    """Codifica un raster de 1 canal como PGM y de 3 canales como PPM."""
    if raster.channels not in (1, 3):
        raise ConvLensError(f"Netpbm solo admite 1 o 3 canales, hay {raster.channels}")
    values = np.clip(np.rint(raster.values), 0, NETPBM_MAXVAL).astype(np.int64)
    maxval = max(255, int(values.max()))
    if raster.channels == 1:
        magic = "P5" if binary else "P2"
    else:
        magic = "P6" if binary else "P3"
    header = f"{magic}\n{raster.width} {raster.height}\n{maxval}\n".encode("ascii")
    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        return header + values.astype(dtype).tobytes()
    rows = values.reshape(raster.height, raster.width * raster.channels)
    body = "\n".join(" ".join(str(v) for v in row) for row in rows) + "\n"
    return header + body.encode("ascii")


def write_netpbm(raster: Raster, path: Union[str, Path], binary: bool = True) -> None:
    Path(path).write_bytes(encode_netpbm(raster, binary=binary))
