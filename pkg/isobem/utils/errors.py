class IsobemError(Exception):
    pass


# region Input errors
class ConfigError(IsobemError, ValueError):
    pass


class MeshError(IsobemError, ValueError):
    pass


class StaleElementError(MeshError):
    """Element is not active in the mesh it was queried against"""


class InterfaceMismatchError(MeshError):
    """Knot lines or sampled points disagree across a glued edge"""


# endregion Input errors


# region Numerical failures
class NumericalError(IsobemError, ArithmeticError):
    pass


class NotSPDError(NumericalError):
    pass


class GeometryError(NumericalError):
    """Degenerate parametrization (Gram determinant not positive)"""


class QuadratureError(NumericalError):
    pass


class ExtrapolationError(NumericalError):
    pass


class DualityError(NumericalError):
    """Singular local Gram matrix while building a dual functional"""


# endregion Numerical failures
