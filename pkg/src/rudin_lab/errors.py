"""Exception hierarchy shared by every module of the package."""


class RudinLabError(Exception):
    """Base class for all package errors."""


class NotUnitary(RudinLabError):
    pass


class NotFinite(RudinLabError):
    pass


class BadDivisor(RudinLabError):
    pass


class NotSubgroup(RudinLabError):
    pass


class OutsideBall(RudinLabError):
    pass


class SingularPoint(RudinLabError):
    def __init__(self, message, element_index=None):
        super().__init__(message)
        self.element_index = element_index


class JacobianZero(RudinLabError):
    def __init__(self, message, side):
        super().__init__(message)
        self.side = side


class OutsideRegion(RudinLabError):
    pass


class NotConverged(RudinLabError):
    pass


class NotCyclotomic(RudinLabError):
    pass


class ZeroForm(RudinLabError):
    pass


class DivisionFailed(RudinLabError):
    pass


class NotReflection(RudinLabError):
    pass


class IsReflection(RudinLabError):
    pass


class IsIdentity(RudinLabError):
    pass


class NoReflections(RudinLabError):
    pass


class EmptySample(RudinLabError):
    pass


class QuadratureUnstable(RudinLabError):
    def __init__(self, message, value=None, stderr=None):
        super().__init__(message)
        self.value = value
        self.stderr = stderr


class SpecError(RudinLabError):
    """Malformed group-spec file."""
