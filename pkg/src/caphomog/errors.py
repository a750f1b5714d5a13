"""Exception hierarchy.

Every fault raised by the library derives from :class:`CapHomogError` so the
CLI can map whole families onto exit codes.
"""


class CapHomogError(Exception):
    """Base class for all library errors."""


class DomainFault(CapHomogError, ValueError):
    """Parameter outside its admissible range."""


class SingularBase(CapHomogError, ArithmeticError):
    """Base matrix of a cofactor expansion is (numerically) singular."""


class OrientationFault(CapHomogError):
    """Deformation gradient with nonpositive determinant."""


class ExpansionRequired(CapHomogError):
    """Operation needs a closed-form gradient or a harmonic expansion."""


class GeometryFault(CapHomogError, ValueError):
    """Mesh geometry cannot be built or is invalid."""


class InconsistentConstraints(CapHomogError, ValueError):
    """Constraint set tags a node in incompatible ways."""


class SolverFault(CapHomogError, RuntimeError):
    """Iterative solver failed to reach its tolerance."""


class StabilityFault(CapHomogError):
    """Capillary parameters violate the stability condition."""


class OutOfDomain(CapHomogError, ValueError):
    """Sample point lies outside the meshed solid."""


class InsideCavity(CapHomogError, ValueError):
    """Evaluation point lies inside the liquid inclusion."""


class DegenerateDenominator(CapHomogError, ArithmeticError):
    """Closed-form coefficient with a vanishing denominator."""


class ConcavityFault(CapHomogError, ArithmeticError):
    """Bound objective is not concave in the free stress parameters."""
