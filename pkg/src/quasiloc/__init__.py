"""Finite-volume laboratory for quasi-local dynamics on Z and Z^2.

Modules: ``lattice`` (regions, cones, fattenings), ``ffunc`` (decay
functions and tail enclosures), ``algebra`` (local operators and conditional
expectations), ``interaction`` (interactions and generators), ``dynamics``
(propagators and propagation bounds), ``transform`` (transformed
interactions), ``factorize`` (cone factorization certificates),
``summability`` (cone geometry and summability certificates) and ``cli``.
"""

__version__ = "0.1.0"

from .algebra import (LocalOperator, commutator, cond_expect, delta_m, embed, op_norm,
                      pauli_string, random_local, spectral_norm)
from .dynamics import (EvolveConfig, Propagator, cocycle_residual, delta_decay_check, heisenberg,
                       lr_check, propagator, volume_convergence_check)
from .errors import (BlockStructureError, DivergenceError, DomainError, GeometryInfeasibleError,
                     IntegrationError, QuasilocError, StageError, TruncationError)
from .factorize import ConeSandwich, FactorizationCertificate, factorize, split_shape_check
from .ffunc import FFunction, TailBound, cf_bounds, g_f, gf_decay_check
from .interaction import (Interaction, InteractionTerm, TimeProfile, decouple, list_generators,
                          make_interaction, random_2local, tfim, xxz)
from .lattice import Cone, LatticeConfig, Region, ball, fatten, fatten_within, set_distance
from .summability import (ConePairConfig, GeometryReport, SummabilityCertificate, build_geometry,
                          certify_anan, certify_theorem, shell_tail)
from .transform import TransformedInteraction, psi_convergence, psio_residual

__all__ = [
    "LocalOperator", "commutator", "cond_expect", "delta_m", "embed", "op_norm", "pauli_string",
    "random_local", "spectral_norm", "EvolveConfig", "Propagator", "cocycle_residual",
    "delta_decay_check", "heisenberg", "lr_check", "propagator", "volume_convergence_check", "BlockStructureError",
    "DivergenceError", "DomainError", "GeometryInfeasibleError", "IntegrationError",
    "QuasilocError", "StageError", "TruncationError", "ConeSandwich",
    "FactorizationCertificate", "factorize", "split_shape_check", "FFunction", "TailBound",
    "cf_bounds", "g_f", "gf_decay_check", "Interaction", "InteractionTerm", "TimeProfile",
    "decouple", "list_generators", "make_interaction", "random_2local", "tfim", "xxz", "Cone",
    "LatticeConfig", "Region", "ball", "fatten", "fatten_within", "set_distance",
    "ConePairConfig", "GeometryReport", "SummabilityCertificate", "build_geometry",
    "certify_anan", "certify_theorem", "shell_tail", "TransformedInteraction",
    "psi_convergence", "psio_residual", "__version__",
]
