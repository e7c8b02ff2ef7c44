"""Exception types shared across the package."""


class Error(Exception):
    """Base class for every domain error raised by this package."""


# ---------------------------------------------------------------- graphs

class DuplicateVertex(Error):
    """A vertex name was declared more than once."""


class SelfLoop(Error):
    """An edge connects a vertex to itself; edges join distinct vertices."""


class UnknownEndpoint(Error):
    """An edge references a vertex that was never declared."""


class DuplicateEdge(Error):
    """The same ordered vertex pair was listed twice."""


class UnknownVertex(Error):
    """An operation referenced a vertex outside the graph."""


class GraphTooLarge(Error):
    """The graph exceeds the cap configured for a brute-force enumeration."""


# ---------------------------------------------------------------- separation

class NonDisjointSets(Error):
    """The vertex sets of a separation query must be pairwise disjoint."""


class EmptyVertexSet(Error):
    """Separation is only defined for nonempty endpoint sets."""


class VertexSetMismatch(Error):
    """Two graphs compared for equivalence carry different vertex sets."""


# ---------------------------------------------------------------- linear models

class SingularSystem(Error):
    """The coefficient system (I - B) is not invertible at working precision."""


class UndefinedPartialCorrelation(Error):
    """The submatrix needed for a partial correlation is singular."""


class ParameterizationFailed(Error):
    """No well-conditioned random coefficient draw was found within the retry budget."""


class InconclusiveOracle(Error):
    """Every trial correlation fell in the dead zone between the decision tolerances."""


class InsufficientData(Error):
    """Too few rows to run the requested conditional independence test."""


# ---------------------------------------------------------------- nonlinear models

class NoConvergence(Error):
    """No equilibrium was found for the given error values."""


class ExcessiveRejection(Error):
    """More than half of all sampling draws failed to reach an equilibrium."""


class SingularPoint(Error):
    """The closed-form map or density is undefined at this point."""


class UnknownSymbol(Error):
    """An equation references a name that is neither a variable nor its own error term."""


class MissingEquation(Error):
    """A declaration references a variable that has no structural equation."""


class DuplicateEquation(Error):
    """A variable was given more than one structural equation."""


class ParseError(Error):
    """Malformed model or graph text. Carries a position when one is known."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)
