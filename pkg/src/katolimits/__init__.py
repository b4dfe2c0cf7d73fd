"""Limits of ``Phi(A^p)^{1/p}`` for positive linear maps, operator-mean limits
and Rényi zero limits, with a high-precision numerical oracle."""

from .errors import InputError, KatoError, NumericalError
from .kato import congruence_limit, map_limit, neg_map_limit, spectral_inf, spectral_sup
from .maps import PositiveMapSpec
from .means import MeanSpec, geometric_limit, mean_eval, mean_projection_eval

__all__ = [
    "InputError",
    "KatoError",
    "MeanSpec",
    "NumericalError",
    "PositiveMapSpec",
    "congruence_limit",
    "geometric_limit",
    "map_limit",
    "mean_eval",
    "mean_projection_eval",
    "neg_map_limit",
    "spectral_inf",
    "spectral_sup",
]

__version__ = "0.1.0"
