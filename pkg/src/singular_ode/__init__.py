"""Analysis and integration of singular ODEs dU/dt = F(U)/zeta(U)."""
from .core import SystemSpec, Trajectory, desingularized_rhs, eval_singular_rhs
from .errors import SingularODEError
from .examples import NamedSystem, analytic_oracle, load_example
from .hypotheses import EquilibriumManifold, HypothesisReport, audit
from .integrate import IntegrationOptions, integrate_desingularized, integrate_singular, time_rescale
from .manifolds import (TaylorManifold, center_manifold, decompose_orbit, reduced_slow_field,
                        uniformly_stable_manifold, verify_sign_preservation)

__version__ = "0.1.0"

__all__ = [
    "SystemSpec", "Trajectory", "desingularized_rhs", "eval_singular_rhs", "SingularODEError",
    "NamedSystem", "analytic_oracle", "load_example", "EquilibriumManifold", "HypothesisReport",
    "audit", "IntegrationOptions", "integrate_desingularized", "integrate_singular", "time_rescale",
    "TaylorManifold", "center_manifold", "decompose_orbit", "reduced_slow_field",
    "uniformly_stable_manifold", "verify_sign_preservation",
]
