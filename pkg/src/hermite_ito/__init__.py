"""Hermite-basis numerics for distribution-valued Ito formulas."""
