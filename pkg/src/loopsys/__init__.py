"""Correlators of matrix differential systems and their loop equations."""

__version__ = "0.1.0"

from .algebra import (
    CartanBasis,
    CasimirTensor,
    Representation,
    casimir_in_rep,
    casimir_tensor,
    char_coeff,
    diagonal_cartan,
    dual_basis,
    gl_representation,
    gram,
    sl_representation,
)
from .geometry import (
    CoverPoint,
    DressedPoint,
    Path,
    PrimeForm,
    SPHERE,
    cover_point,
    dressed,
    loop_around,
    path_compose,
    prime_eval,
    segment,
    winding_number,
)
from .flatsection import (
    FlatSolution,
    HiggsField,
    IntegratorOptions,
    higgs_eval,
    m_field,
    monodromy,
    transport,
)

__all__ = [
    "CartanBasis",
    "CasimirTensor",
    "CoverPoint",
    "DressedPoint",
    "FlatSolution",
    "HiggsField",
    "IntegratorOptions",
    "Path",
    "PrimeForm",
    "Representation",
    "SPHERE",
    "casimir_in_rep",
    "casimir_tensor",
    "char_coeff",
    "cover_point",
    "diagonal_cartan",
    "dressed",
    "dual_basis",
    "gl_representation",
    "gram",
    "higgs_eval",
    "loop_around",
    "m_field",
    "monodromy",
    "path_compose",
    "prime_eval",
    "segment",
    "sl_representation",
    "transport",
    "winding_number",
]
