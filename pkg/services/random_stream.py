"""
services/random_stream.py - ConvLens

Generador SplitMix64. Todas las operaciones aleatorias (recocido simulado,
recortes de datasets) consumen este flujo para que la salida sea
reproducible bit a bit dada la semilla.
"""

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """Flujo pseudoaleatorio de 64 bits con estado explícito."""

    def __init__(self, seed: int):
        if seed < 0 or seed > _MASK64:
            raise ValueError(f"La semilla debe estar en [0, 2^64): {seed}")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN_GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniforme en [0, 1) con 53 bits de mantisa."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randint(self, n: int) -> int:
        """Entero uniforme en [0, n). Reducción por módulo (sesgo < n/2^64)."""
        if n <= 0:
            raise ValueError(f"El rango debe ser positivo: {n}")
        return self.next_u64() % n

    def randint_inclusive(self, low: int, high: int) -> int:
        """Entero uniforme en [low, high], como RANDINT(low, high)."""
        return low + self.randint(high - low + 1)
