"""Partial sums of k-free-supported quadratic characters: sieves, characters,
Dirichlet-series coefficient algebra, zeta/L evaluation and experiments."""

__version__ = "0.1.0"

from .errors import (CapacityError, ComputationError, ConfigError, DomainError,
                     IdentityMismatchError, KFreeError, PoleError, RegionError,
                     ValidationError)
from .sequences import CoefficientSequence
from .sieves import KFreeParams, SieveTable, build_sieve
from .characters import (ModifiedCharacter, QuadraticCharacter, character_from_discriminant,
                         character_from_table, parse_character)
from .analytic import EvalBudget, F_closed_form, dirichlet_L, hurwitz_zeta, riemann_zeta
