"""
main_demo.py - ConvLens

Recorrido de demostración sobre los ficheros de fixtures/.

Para ejecutar la demo:
    python main_demo.py
"""

from pathlib import Path

from models.permutation import Permutation
from services import (
    clustering_service,
    confmat_service,
    netarch_service,
    netcalc_service,
    ordering_service,
    predops_service,
)

FIXTURES = Path(__file__).parent / "fixtures"


def main():
    print("=== CONVLENS - Análisis de clasificadores CNN ===\n")

    # Matriz de confusión de ejemplo
    print("--- Métricas ---")
    c = confmat_service.read_confusion(FIXTURES / "example3.csv")
    report = confmat_service.metrics(c)
    print(f"Exactitud: {report.accuracy:.3f}  exactitud media: {report.mean_accuracy:.3f}")
    print(f"Clases sesgadas: {'sí' if report.skew_flag else 'no'}")

    # Ordenación
    print("\n--- Ordenación ---")
    exact = ordering_service.brute_force_order(c)
    schedule = ordering_service.default_schedule(c, seed=1)
    annealed = ordering_service.anneal_order(c, schedule)
    print(f"Objetivo inicial: {exact.initial_objective}")
    print(f"Fuerza bruta: {exact.order} -> {exact.objective}")
    print(f"Recocido:     {annealed.order} -> {annealed.objective}")

    # Clusters
    print("\n--- Clusters ---")
    order = Permutation(exact.order)
    plan = clustering_service.split_by_threshold(c, order, theta=11)
    print(f"Fuerzas: {list(plan.strengths)}  θ=11 -> {clustering_service.cluster_names(c, plan).groups}")

    coarse = clustering_service.read_clustering(FIXTURES / "cifar100.coarse")
    for name in ("spectral", "cmo"):
        candidate = clustering_service.read_clustering(FIXTURES / f"cifar100_{name}.clusters")
        errors = clustering_service.cluster_error(candidate, coarse)
        per_group = ", ".join(f"{r.group}={r.error}" for r in errors.rows)
        print(f"{name}: {per_group} (total {errors.total})")

    # Arquitecturas
    print("\n--- Arquitecturas ---")
    for fixture, classes in (("lenet5", None), ("alexnet", None), ("vgg16", None),
                             ("baseline", 100), ("optimized", 100)):
        arch = netarch_service.read_arch(FIXTURES / f"{fixture}.arch", classes=classes)
        params = sum(netcalc_service.count_params(arch))
        flops = sum(netcalc_service.count_flops(arch))
        print(f"{fixture:10s} parámetros {params:>12,}  FLOPs {flops:>16,}")

    dense = netcalc_service.dense_block_params(2, 12)
    print(f"Bloque denso L=2, n=12: {dense.printed} (impresa) / {dense.summation} (suma)")

    # Activaciones
    print("\n--- Activaciones ---")
    for x in (-4.0, 1.0, 4.0):
        value = predops_service.activation("s2relu", x)
        print(f"S2ReLU({x:+.0f}) = {value.value:+.1f}  derivada {value.derivative}")


if __name__ == "__main__":
    main()
