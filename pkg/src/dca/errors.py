"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`DCAError`
so that the command line can map domain failures to exit code 1.
"""


class DCAError(Exception):
    """Base class for domain errors."""


# lattice
class EmptyLattice(DCAError):
    pass


class InvalidStep(DCAError, ValueError):
    pass


class NotBipartite(DCAError):
    pass


class DegenerateFace(DCAError):
    pass


class NotOnBoundary(DCAError, KeyError):
    pass


class ParseError(DCAError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(str(field))
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(DCAError):
    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(str(v) for v in report.violations))


# operators
class SingularFace(DCAError):
    pass


class DegenerateDiagonal(DCAError):
    pass


# solver
class SolverDiverged(DCAError):
    pass


class NotHarmonic(DCAError):
    pass


class NotAnalytic(DCAError):
    pass


class NotOrthogonal(DCAError):
    pass


class InconsistentBoundaryData(DCAError):
    pass


# fem
class NotDelaunay(DCAError):
    pass


class IrregularBoundary(DCAError):
    pass


class DegenerateCircumcenter(DCAError):
    pass


class DegenerateTriangle(DCAError):
    pass


# measure
class NotAnArc(DCAError):
    pass


class WalkCapExceeded(DCAError):
    pass


# analysis
class BoxOutsideLattice(DCAError):
    pass


class MarginTooSmall(DCAError):
    pass


# cli / expressions
class ExprSyntaxError(DCAError):
    def __init__(self, position, expected, message=None):
        self.position = position
        self.expected = tuple(expected)
        text = message or f"expected one of {', '.join(self.expected)}"
        super().__init__(f"syntax error at {position}: {text}")


class NonRealResult(DCAError):
    pass


class IoError(DCAError, OSError):
    pass
