class QSysError(ValueError):
    """Base class for all engine errors"""


class ShapeMismatch(QSysError):
    pass


class DomainMismatch(QSysError):
    pass


class ObjectMismatch(QSysError):
    pass


class UnknownObject(QSysError):
    pass


class StructuralError(QSysError):
    """Presentation data is incomplete or has inconsistent dimensions"""


class QSystemMismatch(QSysError):
    pass


class InvalidStructure(QSysError):
    """A Q-system, bimodule, functor or transformation fails its own axioms"""


class NotAProjection(QSysError):
    def __init__(self, hermitian_residual: float, idempotent_residual: float, message: str | None = None):
        self.hermitian_residual = hermitian_residual
        self.idempotent_residual = idempotent_residual
        super().__init__(
            message
            or f"Not a projection: |p-p^*| = {hermitian_residual:.3e}, |p^2-p| = {idempotent_residual:.3e}"
        )


class DegenerateSpectrum(QSysError):
    """Eigen-splitting produced a non-minimal projection"""


class SchemaError(QSysError):
    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
