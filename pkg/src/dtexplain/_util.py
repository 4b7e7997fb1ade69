from __future__ import annotations


def format_sig(value: float, digits: int = 4) -> str:
    """Render a number with up to `digits` significant digits ("2.45", "0.8")."""
    return f"{float(value):.{digits}g}"


def round_sig(value: float, digits: int = 4) -> float:
    return float(format_sig(value, digits))
