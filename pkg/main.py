"""
main.py - ConvLens

Interfaz de línea de comandos: un subcomando por operación.

Códigos de salida:
    0  éxito
    1  error de entrada o validación (incluye flags desconocidos)
    2  violación de un invariante interno
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import TypeAdapter

from models.permutation import Permutation
from models.tensor import FilterTensor, PredictionSet
from schemas.confusion_schemas import LossReport
from schemas.ordering_schemas import OrderingResult
from schemas.raster_schemas import CropManifest, CropRecord
from schemas.render_schemas import HeatmapOptions
from schemas.tensor_schemas import ActivationInfo, CorrelationReport, UpdateStat
from services import (
    clustering_service,
    confmat_service,
    datagen_service,
    netarch_service,
    netcalc_service,
    ordering_service,
    predops_service,
    render_service,
)
from services.config import Settings, get_settings
from services.errors import InvariantViolation

logger = logging.getLogger("convlens")

Output = Union[str, bytes]


class UsageError(Exception):
    """Subcomando o flag no válido."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ==================== UTILIDADES ====================

def _load_order(value: Optional[str], k: int) -> Permutation:
    """
    --order acepta el JSON que escribe `order` / `order-exact` o una lista
    de índices separados por comas. Sin valor, el orden identidad.
    """
    if value is None:
        return Permutation.identity(k)
    path = Path(value)
    if path.is_file():
        order = OrderingResult.model_validate_json(path.read_text(encoding="utf-8")).permutation
    else:
        try:
            order = Permutation(int(v) for v in value.split(","))
        except ValueError:
            raise ValueError(f"--order no es un fichero ni una lista de índices: {value}") from None
    if len(order) != k:
        raise ValueError(f"--order tiene {len(order)} posiciones para {k} clases")
    return order


def _rows_to_csv(rows: np.ndarray) -> str:
    frame = pd.DataFrame([[repr(float(v)) for v in row] for row in rows])
    return frame.to_csv(index=False, header=False, lineterminator="\n")


def _flat_weights(path: Optional[str]) -> np.ndarray:
    if path is None:
        return np.zeros(0)
    tensors = predops_service.read_tensors(path)
    return np.concatenate([v.ravel() for v in tensors.values()]) if tensors else np.zeros(0)


class _PromptResponder:
    """Pregunta por stderr y lee y/n de la entrada estándar."""

    def __call__(self, left: str, right: str, strength: int) -> bool:
        while True:
            print(f"¿'{left}' y '{right}' (fuerza {strength}) van en el mismo cluster? [y/n] ",
                  end="", file=sys.stderr, flush=True)
            answer = sys.stdin.readline()
            if not answer:
                raise ValueError("La entrada terminó durante la sesión interactiva")
            answer = answer.strip().lower()
            if answer in ("y", "s", "yes", "si", "sí"):
                return True
            if answer in ("n", "no"):
                return False


# ==================== MATRICES DE CONFUSIÓN ====================

def cmd_metrics(args, settings: Settings) -> Output:
    c = confmat_service.read_confusion(args.input)
    epsilon = settings.skew_epsilon if args.epsilon is None else args.epsilon
    return confmat_service.metrics(c, epsilon=epsilon, top=args.top).model_dump_json(indent=2)


def cmd_loss(args, settings: Settings) -> Output:
    outputs = confmat_service.read_prediction_rows(args.outputs)
    targets = confmat_service.read_prediction_rows(args.targets)
    clamp_eps = settings.clamp_eps if args.clamp_eps is None else args.clamp_eps
    loss = confmat_service.cross_entropy_loss(
        outputs, targets, _flat_weights(args.weights),
        lambda1=args.lambda1, lambda2=args.lambda2, clamp_eps=clamp_eps,
    )
    return LossReport(loss=loss, samples=len(outputs), lambda1=args.lambda1,
                      lambda2=args.lambda2).model_dump_json(indent=2)


# ==================== ORDENACIÓN ====================

def cmd_order(args, settings: Settings) -> Output:
    c = confmat_service.read_confusion(args.input)
    schedule = ordering_service.default_schedule(
        c, steps=args.steps, t0=args.t0, cooling=args.cooling, restarts=args.restarts,
        seed=args.seed, metropolis=args.metropolis, trace_every=args.trace_every,
    )
    logger.info("Recocido: %d pasos, T0=%.3f, c=%.6f, %d cadenas",
                schedule.steps, schedule.t0, schedule.cooling, schedule.restarts)
    result = ordering_service.anneal_order(c, schedule)
    return result.model_dump_json(indent=2, exclude_none=True)


def cmd_order_exact(args, settings: Settings) -> Output:
    c = confmat_service.read_confusion(args.input)
    return ordering_service.brute_force_order(c).model_dump_json(indent=2, exclude_none=True)


# ==================== CLUSTERS ====================

def cmd_cluster(args, settings: Settings) -> Output:
    c = confmat_service.read_confusion(args.input)
    order = _load_order(args.order, c.k)
    strengths = clustering_service.adjacency_strengths(c, order)
    if args.theta is not None:
        theta = args.theta
    elif args.fraction is not None:
        theta = clustering_service.percentile_threshold(strengths, args.fraction)
    else:
        if args.answers is not None:
            responder = clustering_service.ScriptedResponder(args.answers)
        else:
            responder = _PromptResponder()
        labels = [c.labels[i] for i in order.order]
        theta = clustering_service.interactive_threshold(strengths, responder, labels)
    plan = clustering_service.split_by_threshold(c, order, theta)
    return clustering_service.plan_to_read(c, plan).model_dump_json(indent=2)


def cmd_cluster_score(args, settings: Settings) -> Output:
    candidate = clustering_service.read_clustering(args.candidate)
    coarse = clustering_service.read_clustering(args.coarse)
    return clustering_service.cluster_error(candidate, coarse).model_dump_json(indent=2)


# ==================== VISUALIZACIÓN ====================

def cmd_render(args, settings: Settings) -> Output:
    c = confmat_service.read_confusion(args.input)
    options = HeatmapOptions(
        zero_diagonal=args.zero_diagonal,
        row_normalize=args.row_normalize,
        cell_px=args.cell_px,
        show_labels=args.labels,
        log_scale=args.log,
    )
    return render_service.heatmap(c, _load_order(args.order, c.k), options)


def cmd_tile(args, settings: Settings) -> Output:
    c = confmat_service.read_confusion(args.input)
    max_block = settings.max_block if args.max_block is None else args.max_block
    report = render_service.tile_blocks(c, _load_order(args.order, c.k), max_block, args.mass_threshold)
    return report.model_dump_json(indent=2)


# ==================== ARQUITECTURAS ====================

def cmd_netcalc_report(args, settings: Settings) -> Output:
    arch = netarch_service.read_arch(args.archfile, classes=args.classes)
    if args.format == "dsl":
        return netarch_service.format_arch(arch)
    act_cost = settings.act_cost if args.act_cost is None else args.act_cost
    factor = netcalc_service.OPTIMIZER_FACTORS[args.optimizer]
    report = netcalc_service.build_report(arch, act_cost=act_cost, batch=args.batch,
                                          bytes_per_value=args.bytes, optimizer_factor=factor)
    memory = netcalc_service.memory_footprint(arch, batch=args.batch, bytes_per_value=args.bytes,
                                              optimizer_factor=factor)
    if args.format == "json":
        return report.model_dump_json(indent=2)
    return netcalc_service.format_table(report, memory, no_color=settings.no_color)


def cmd_netcalc_dense(args, settings: Settings) -> Output:
    return netcalc_service.dense_block_params(args.depth, args.growth).model_dump_json(indent=2)


# ==================== PREDICCIONES Y PESOS ====================

def cmd_act(args, settings: Settings) -> Output:
    if args.list:
        return TypeAdapter(List[ActivationInfo]).dump_json(
            predops_service.activation_catalog(), indent=2).decode("utf-8")
    if args.name is None or args.x is None:
        raise ValueError("act necesita --name y --x (o --list)")
    return predops_service.activation(args.name, args.x, args.alpha).model_dump_json(indent=2)


def cmd_filtercorr(args, settings: Settings) -> Output:
    tensors = predops_service.read_tensors(args.input)
    filters = predops_service.filters_from_tensors(tensors)
    if args.pair:
        by_name = {f.name: f for f in filters}
        missing = [name for name in args.pair if name not in by_name]
        if missing:
            raise ValueError(f"Filtros no encontrados: {', '.join(missing)}")
        a, b = (by_name[name] for name in args.pair)
        value = predops_service.k_translation_correlation(a, b, args.k)
        report = CorrelationReport(k=args.k, filters=2, value=value, pair=list(args.pair))
    else:
        value = predops_service.avg_max_translation_correlation(filters, args.k)
        report = CorrelationReport(k=args.k, filters=len(filters), value=value)
    return report.model_dump_json(indent=2, exclude_none=True)


def cmd_ensemble(args, settings: Settings) -> Output:
    members = [predops_service.read_predictions(path) for path in args.input]
    return _rows_to_csv(predops_service.ensemble_average(members).rows)


def cmd_smooth(args, settings: Settings) -> Output:
    targets = predops_service.read_predictions(args.targets)
    ensemble = predops_service.read_predictions(args.ensemble)
    return _rows_to_csv(predops_service.smooth_labels(targets, ensemble, args.alpha).rows)


def cmd_updates(args, settings: Settings) -> Output:
    series = predops_service.snapshots_from_tensors(predops_service.read_tensors(args.input))
    stats = predops_service.weight_update_stats(series)
    return TypeAdapter(List[UpdateStat]).dump_json(stats, indent=2).decode("utf-8")


# ==================== RASTERS ====================

def cmd_filter2d(args, settings: Settings) -> Output:
    image = datagen_service.read_netpbm(args.image)
    tensors = predops_service.read_tensors(args.kernel)
    if not tensors:
        raise ValueError("El fichero de kernel no contiene tensores")
    name, values = next(iter(tensors.items()))
    result = datagen_service.filter2d(image, FilterTensor(values, name=name), args.boundary)
    return predops_service.tensors_to_json({"filtered": result.values[:, :, 0]})


def cmd_crops(args, settings: Settings) -> Output:
    image = datagen_service.read_netpbm(args.image)
    labels = datagen_service.read_netpbm(args.labels, is_label=True)
    samples = datagen_service.crop_dataset(image, labels, args.width, args.height, args.count,
                                           args.majority, args.seed)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for sample in samples:
        image_file = label_file = None
        if out_dir is not None:
            extension = "pgm" if sample.image.channels == 1 else "ppm"
            image_file = f"crop_{sample.index:05d}.{extension}"
            label_file = f"crop_{sample.index:05d}_labels.pgm"
            datagen_service.write_netpbm(sample.image, out_dir / image_file)
            datagen_service.write_netpbm(sample.labels, out_dir / label_file)
        records.append(CropRecord(index=sample.index, x=sample.x, y=sample.y,
                                  majority_class=sample.majority_class, coverage=sample.coverage,
                                  image_file=image_file, label_file=label_file))
    manifest = CropManifest(width=args.width, height=args.height, draws=args.count,
                            majority=args.majority, seed=args.seed, samples=records)
    return manifest.model_dump_json(indent=2)


# ==================== PARSER ====================

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="Fichero de salida (por defecto stdout)")
    common.add_argument("--seed", type=int, help="Semilla (por defecto CONVLENS_SEED o 0)")
    common.add_argument("--verbose", action="store_true", help="Logging a nivel DEBUG")

    parser = _Parser(prog="convlens", description="Análisis de clasificadores CNN y sus matrices de confusión")
    commands = parser.add_subparsers(dest="command", metavar="subcomando")
    commands.required = True

    p = commands.add_parser("metrics", parents=[common], help="Métricas de una matriz de confusión")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--top", type=int, default=confmat_service.DEFAULT_TOP_CONFUSED)
    p.set_defaults(handler=cmd_metrics)

    p = commands.add_parser("order", parents=[common], help="Ordena clases con recocido simulado")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--steps", type=int,
                   help=f"Pasos por reinicio (por defecto {ordering_service.DEFAULT_STEPS_PER_CLASS}·K)")
    p.add_argument("--t0", type=float)
    p.add_argument("--cooling", type=float)
    p.add_argument("--restarts", type=int, default=ordering_service.DEFAULT_RESTARTS)
    p.add_argument("--metropolis", choices=("best", "current"), default="best")
    p.add_argument("--trace-every", type=int, default=0)
    p.set_defaults(handler=cmd_order)

    p = commands.add_parser("order-exact", parents=[common], help="Orden óptimo por fuerza bruta (K <= 10)")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(handler=cmd_order_exact)

    p = commands.add_parser("cluster", parents=[common], help="Corta la matriz ordenada en clusters")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--order")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--theta", type=int)
    mode.add_argument("--fraction", type=float)
    mode.add_argument("--interactive", action="store_true")
    p.add_argument("--answers", help="Respuestas y/n para la sesión interactiva")
    p.set_defaults(handler=cmd_cluster)

    p = commands.add_parser("cluster-score", parents=[common], help="Error frente a grupos gruesos")
    p.add_argument("--candidate", required=True)
    p.add_argument("--coarse", required=True)
    p.set_defaults(handler=cmd_cluster_score)

    p = commands.add_parser("render", parents=[common], help="Mapa de calor SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--order")
    p.add_argument("--zero-diagonal", action="store_true")
    p.add_argument("--row-normalize", action="store_true")
    p.add_argument("--cell-px", type=int, default=12)
    p.add_argument("--labels", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--log", action="store_true")
    p.set_defaults(handler=cmd_render)

    p = commands.add_parser("tile", parents=[common], help="Matrices necesarias para K grande")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--order")
    p.add_argument("--max-block", type=int)
    p.add_argument("--mass-threshold", type=int, default=0)
    p.set_defaults(handler=cmd_tile)

    p = commands.add_parser("netcalc", help="Costes de arquitecturas")
    netcalc = p.add_subparsers(dest="netcalc_command", metavar="acción")
    netcalc.required = True
    q = netcalc.add_parser("report", parents=[common], help="Parámetros, FLOPs y memoria por capa")
    q.add_argument("archfile")
    q.add_argument("--classes", type=int)
    q.add_argument("--batch", type=int, default=1)
    q.add_argument("--optimizer", choices=tuple(netcalc_service.OPTIMIZER_FACTORS), default="sgd")
    q.add_argument("--bytes", type=int, default=4)
    q.add_argument("--act-cost", type=int)
    q.add_argument("--format", choices=("table", "json", "dsl"), default="table")
    q.set_defaults(handler=cmd_netcalc_report)
    q = netcalc.add_parser("dense", parents=[common], help="Parámetros de un bloque denso")
    q.add_argument("--depth", type=int, required=True)
    q.add_argument("--growth", type=int, required=True)
    q.set_defaults(handler=cmd_netcalc_dense)

    p = commands.add_parser("act", parents=[common], help="Funciones de activación")
    p.add_argument("--name", choices=predops_service.ACTIVATION_NAMES)
    p.add_argument("--x", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--list", action="store_true")
    p.set_defaults(handler=cmd_act)

    p = commands.add_parser("filtercorr", parents=[common], help="Correlación por traslación de filtros")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--pair", nargs=2, metavar=("A", "B"))
    p.set_defaults(handler=cmd_filtercorr)

    p = commands.add_parser("ensemble", parents=[common], help="Media de predicciones")
    p.add_argument("--in", dest="input", nargs="+", required=True)
    p.set_defaults(handler=cmd_ensemble)

    p = commands.add_parser("smooth", parents=[common], help="Suavizado de etiquetas con un ensemble")
    p.add_argument("--targets", required=True)
    p.add_argument("--ensemble", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.set_defaults(handler=cmd_smooth)

    p = commands.add_parser("loss", parents=[common], help="Entropía cruzada regularizada")
    p.add_argument("--outputs", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--weights")
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--lambda2", type=float, default=0.0)
    p.add_argument("--clamp-eps", type=float)
    p.set_defaults(handler=cmd_loss)

    p = commands.add_parser("updates", parents=[common], help="Estadísticas de |Δw| entre épocas")
    p.add_argument("--in", dest="input", required=True)
    p.set_defaults(handler=cmd_updates)

    p = commands.add_parser("filter2d", parents=[common], help="Filtrado lineal de una imagen")
    p.add_argument("--image", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--boundary", choices=datagen_service.BOUNDARY_MODES, default="zero")
    p.set_defaults(handler=cmd_filter2d)

    p = commands.add_parser("crops", parents=[common], help="Recortes de clasificación desde segmentación")
    p.add_argument("--image", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--majority", type=float, default=0.5)
    p.add_argument("--out-dir")
    p.set_defaults(handler=cmd_crops)

    return parser


# ==================== EJECUCIÓN ====================

def _write(output: Output, path: Optional[str]) -> None:
    data = output.encode("utf-8") if isinstance(output, str) else output
    if path:
        Path(path).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
        sys.stdout.flush()


def main(argv: Optional[List[str]] = None) -> int:
    """
    Ejecuta un subcomando.

    Returns:
        Código de salida (0, 1 o 2)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0

    try:
        settings = get_settings()
        level = logging.DEBUG if args.verbose else settings.log_level
        logging.basicConfig(level=level, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s", force=True)
        if args.seed is None:
            args.seed = settings.seed
        output = args.handler(args, settings)
        _write(output, args.out)
    except InvariantViolation as exc:
        logger.error("Invariante violado: %s", exc)
        print(f"Error interno: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
