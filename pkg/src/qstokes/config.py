"""Numerical defaults and the runtime precision setting."""

from __future__ import annotations

import os

DEFAULT_WINDOW = (-64, 64)
DEFAULT_ORDER = 48
VALUATION_EPSILON = 1e-13
TAIL_EPSILON = 1e-16
Q_MARGIN = 0.1
EIG_TOLERANCE = 1e-9
RESONANCE_MARGIN = 1e-6

DOUBLE_DIGITS = 15
PRECISION_ENV = "QSTOKES_PRECISION"


def precision_digits(override: int | str | None = None) -> int:
    """Decimal digits used by the arbitrary-precision code paths.

    ``None`` reads the ``QSTOKES_PRECISION`` environment variable. The value
    ``"double"`` (or anything up to 15 digits) selects hardware doubles.
    """
    raw = override if override is not None else os.environ.get(PRECISION_ENV)
    if raw is None or raw == "" or str(raw).lower() == "double":
        return DOUBLE_DIGITS
    try:
        digits = int(raw)
    except (TypeError, ValueError):
        raise ValueError(f"precision must be an integer or 'double', got {raw!r}") from None
    if digits < 1:
        raise ValueError("precision must be positive")
    return max(digits, DOUBLE_DIGITS)
