"""
services/errors.py - ConvLens

Excepciones del dominio. Los servicios lanzan estas excepciones y main.py
las traduce a códigos de salida.
"""

from typing import Optional


class ConvLensError(ValueError):
    """Error de entrada o de validación (código de salida 1)."""


class ParseError(ConvLensError):
    """Error de sintaxis en el lenguaje de arquitecturas, con posición."""

    def __init__(self, message: str, line: int, column: int = 1, source: Optional[str] = None):
        self.line = line
        self.column = column
        self.source = source
        where = f"{source}:" if source else "línea "
        super().__init__(f"{where}{line}:{column}: {message}")


class InvariantViolation(RuntimeError):
    """Un invariante interno no se cumple (código de salida 2)."""
