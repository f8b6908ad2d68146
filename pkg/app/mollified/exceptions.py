class CollocationToolkitError(Exception):
    """Base class for every error raised by the mollified collocation toolkit"""


class GeometryError(CollocationToolkitError):
    pass


class QuadratureError(CollocationToolkitError):
    pass


class MollifierError(CollocationToolkitError):
    pass


class MeshError(CollocationToolkitError):
    pass


class BasisError(CollocationToolkitError):
    pass


class CollocationError(CollocationToolkitError):
    pass


class AssemblyError(CollocationToolkitError):
    pass


class ProblemError(CollocationToolkitError):
    pass


class SolveError(CollocationToolkitError):
    """Raised when the least-squares system cannot be solved reliably"""

    def __init__(self, message, condition_estimate=None):
        super().__init__(message)
        self.condition_estimate = condition_estimate


class StudyError(CollocationToolkitError):
    """Raised by the study runner, carrying the refinement level that failed"""

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level
