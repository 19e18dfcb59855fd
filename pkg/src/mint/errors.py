"""Exception hierarchy shared by every mint module."""


class MintError(Exception):
    """Base class for all library errors."""


class HermiticityError(MintError, ValueError):
    pass


class NotPSDError(MintError, ValueError):
    def __init__(self, min_eigenvalue, floor):
        super().__init__(f"operator is not PSD: min eigenvalue {min_eigenvalue:.3e} < floor {floor:.1e}")
        self.min_eigenvalue = min_eigenvalue


class EigenError(MintError, ArithmeticError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class ZeroOperatorError(MintError, ValueError):
    pass


class DimensionError(MintError, ValueError):
    pass


class InvalidMeasurement(MintError, ValueError):
    pass


class PartitionError(MintError, ValueError):
    pass


class BasisError(MintError, ValueError):
    def __init__(self, message, worst=float("nan")):
        super().__init__(f"{message} (worst deviation {worst:.3e})")
        self.worst = worst


class InvalidState(MintError, ValueError):
    pass


class TargetUnreachable(MintError, ValueError):
    pass


class BracketError(MintError, ArithmeticError):
    pass


class EpsilonOutOfRange(MintError, ValueError):
    def __init__(self, epsilon, upper, *, open_interval=False):
        interval = f"(0, {upper:.6g})" if open_interval else f"[0, {upper:.6g}]"
        super().__init__(f"epsilon {epsilon:.6g} outside {interval}")
        self.epsilon = epsilon
        self.upper = upper


class NotProduct(MintError, ValueError):
    def __init__(self, ratio):
        super().__init__(f"operator is not a tensor product: singular value ratio {ratio:.3e}")
        self.ratio = ratio


class NonDisturbanceViolated(MintError, ValueError):
    def __init__(self, message, worst=float("nan")):
        super().__init__(f"{message} (worst off-diagonal {worst:.3e})")
        self.worst = worst


class FactorizationFailed(MintError, ValueError):
    pass


class ThresholdHit(MintError, ValueError):
    """An element has (numerically) zero weight on a basis state, so it already reaches the threshold."""

    def __init__(self, element, state, value):
        super().__init__(f"element {element} has weight {value:.3e} on state {state}")
        self.element = element
        self.state = state
        self.value = value


class IncompleteKraus(MintError, ValueError):
    pass


class NoProgressAnywhere(MintError, ValueError):
    def __init__(self, worst_leaf):
        super().__init__(f"no leaf makes progress (largest leaf value {worst_leaf:.3e})")
        self.worst_leaf = worst_leaf


class ExtractionTrivial(MintError, ValueError):
    pass


class PreconditionError(MintError, ValueError):
    pass
