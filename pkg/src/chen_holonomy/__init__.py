"""Higher holonomy of formal power series connections via iterated integrals and the cobar complex."""

from .cobar import CobarElement, Truncation, cobar_differential, word
from .coalgebra import CoalgebraSpec, check_coalgebra, load_coalgebra, make_coalgebra
from .connection import Connection, transport_pair, twisted_residual
from .holonomy import hol1, hol2, hol3, lemma_battery, quotient_reduce, quotient_space
from .iterated import QuadratureSpec, iterated_integral
from .presets import preset, wrap3_path

__all__ = [
    "CobarElement",
    "CoalgebraSpec",
    "Connection",
    "QuadratureSpec",
    "Truncation",
    "check_coalgebra",
    "cobar_differential",
    "hol1",
    "hol2",
    "hol3",
    "iterated_integral",
    "lemma_battery",
    "load_coalgebra",
    "make_coalgebra",
    "preset",
    "quotient_reduce",
    "quotient_space",
    "transport_pair",
    "twisted_residual",
    "word",
    "wrap3_path",
]
