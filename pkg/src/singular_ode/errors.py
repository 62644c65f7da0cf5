"""Exception hierarchy.

Every failure raised by the package derives from :class:`SingularODEError`
so callers can catch the whole family at once.
"""


class SingularODEError(Exception):
    """Base class for all package errors."""


class InvalidSystem(SingularODEError):
    """The system data violates its invariants (e.g. F(origin) != 0)."""


# integration ---------------------------------------------------------------

class SingularEvaluation(SingularODEError):
    """|zeta(U)| is below the singular floor, F/zeta cannot be evaluated."""


class StepFailure(SingularODEError):
    """The adaptive controller underflowed its minimum step."""

    def __init__(self, msg, trajectory=None):
        super().__init__(msg)
        self.trajectory = trajectory


class InvalidInitialState(SingularODEError):
    """Initial state with zeta <= 0."""


class NotDiffeomorphism(SingularODEError):
    """The t <-> tau change of variables is not defined along the orbit."""


# hypotheses ----------------------------------------------------------------

class SeedingFailed(SingularODEError):
    """Newton projection onto the singular set diverged for every seed."""


class ExtensionUndefined(SingularODEError):
    """(grad zeta . F) / zeta has no continuous extension at the point."""


class NoIntersection(SingularODEError):
    """The equilibrium manifold does not meet the singular set in the box."""


# manifolds -----------------------------------------------------------------

class IllConditioned(SingularODEError):
    """Spectral subspaces are too close to be separated reliably."""


class NoCenterDirections(SingularODEError):
    """The linearization has a trivial center subspace."""


class NoStableDirections(SingularODEError):
    """The linearization at a base point has no stable directions."""


class ResolutionFailure(SingularODEError):
    """Order-matching linear system for the manifold is singular."""


class DivisionDefect(SingularODEError):
    """The reduced field on the center manifold has a pole on the singular set."""


class ValidationFailure(SingularODEError):
    """Forward integration contradicts the predicted fiber decay."""


class NotOnManifold(SingularODEError):
    """Orbit is not on the uniformly stable manifold within tolerance."""


class NoAsymptoticEquilibrium(SingularODEError):
    """The orbit does not converge to an equilibrium."""


# block reduction / Navier-Stokes -------------------------------------------

class NonInvertibleB(SingularODEError):
    """The parabolic block b(u) is (numerically) singular."""


class InsufficientSamples(SingularODEError):
    """Too few profile samples to reconstruct derivatives."""


class NonPositiveEnergy(SingularODEError):
    """Internal energy must be positive."""


class DerivationInconsistency(SingularODEError):
    """Block entries are inconsistent with the primitive steady equations."""


class SignViolation(SingularODEError):
    """The velocity (zeta) changed sign along a computed profile."""


# examples ------------------------------------------------------------------

class UnknownName(SingularODEError, KeyError):
    """No built-in system with that name."""


class BlowupReached(SingularODEError):
    """The closed-form solution does not exist at the requested time."""
