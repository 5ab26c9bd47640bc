"""Numerical toolkit for q-difference modules with integral slopes.

Truncated Laurent series, theta functions, Newton polygons, the
Birkhoff-Guenther normal form, algebraic and Borel-Ritt summation, and
Stokes cocycles between summation directions.
"""

from .errors import QStokesError
from .module_rep import BlockModule, Direction, GaugeTransform, PureBlock
from .normal_form import bg_normal_form, formal_solution
from .series_core import LaurentSeries
from .stokes_lab import stokes_cocycle
from .summation import algebraic_sum, q_euler_sum

__version__ = "0.1.0"

__all__ = [
    "BlockModule",
    "Direction",
    "GaugeTransform",
    "LaurentSeries",
    "PureBlock",
    "QStokesError",
    "algebraic_sum",
    "bg_normal_form",
    "formal_solution",
    "q_euler_sum",
    "stokes_cocycle",
]
