"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`CapdualError`
so that the command-line front end can map it onto an exit code.
"""


class CapdualError(Exception):
    """Base class for all package errors."""


class PreconditionError(CapdualError, ValueError):
    """An operation was called with arguments outside its contract."""


class InvalidDomain(PreconditionError):
    """Polygon is not a simple, counterclockwise closed curve."""


class InvalidCuts(PreconditionError):
    """Quadrilateral cut parameters are duplicated or out of order."""


class DivergentIntegral(CapdualError, ArithmeticError):
    """Weighted line integral is infinite (non-integrable endpoint singularity)."""


class MeshFailure(CapdualError):
    """Triangulation could not meet its size or angle bounds."""


class EmptyTag(CapdualError):
    """A node-set tag selected no nodes; the mesh needs refinement."""


class DisconnectedTag(CapdualError):
    """Nodes tagged along a curve do not form an edge-connected set."""


class SingularSystem(CapdualError):
    """Dirichlet data leave the linear system rank deficient."""


class BranchFailure(CapdualError):
    """The harmonic conjugate could not be made consistent on the mesh."""


class LookupFailure(CapdualError):
    """A point could not be located in the (image) triangulation."""


class UnresolvedScale(CapdualError):
    """A conformal annulus is too small for the mesh."""


class Disconnected(CapdualError):
    """The interior path graph splits into several components."""


class NonConvergence(CapdualError):
    """An iterative solver stopped before meeting its tolerances."""
