# finslab/__init__.py

"""Laboratório numérico para métricas de Finsler, em especial (α, β)-métricas."""

__version__ = "0.1.0"
