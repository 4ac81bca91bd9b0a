"""Exception hierarchy shared by all nhdyn modules."""

from __future__ import annotations


class NHDynError(Exception):
    """Base class for every error raised by nhdyn."""


class NumericalFailure(NHDynError):
    """An integration produced a state that violates a structural invariant."""


class DimensionMismatch(NHDynError, ValueError):
    pass


class UnsupportedDimension(DimensionMismatch):
    pass


class SingularMatrix(NHDynError, ArithmeticError):
    pass


class NotHermitian(NHDynError, ValueError):
    pass


class NotHermitianObservable(NotHermitian):
    pass


class NotPositiveDefinite(NHDynError, ValueError):
    def __init__(self, min_eigenvalue: float, message: str | None = None):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(message or f"matrix is not positive definite (min eigenvalue {min_eigenvalue:.3e})")


class NearDegenerate(NHDynError, ValueError):
    """Spectral gap too small for a biorthogonal basis (exceptional point or true degeneracy)."""

    def __init__(self, gap: float, threshold: float):
        self.gap = float(gap)
        self.threshold = float(threshold)
        super().__init__(f"spectral gap {gap:.3e} <= {threshold:.3e}")


class ZeroVector(NHDynError, ValueError):
    pass


class NoRealSpectrum(NHDynError, ValueError):
    def __init__(self, max_imag: float):
        self.max_imag = float(max_imag)
        super().__init__(f"spectrum is not real (max |Im E| = {max_imag:.3e})")


class SpectrumMismatch(NHDynError, ValueError):
    pass


class AtExceptionalPoint(NHDynError, ValueError):
    pass


class NotPTBroken(NHDynError, ValueError):
    pass


class UnsupportedInitialState(NHDynError, ValueError):
    pass


class DenominatorUnderflow(NHDynError, ArithmeticError):
    pass


class NotPHSymmetric(NHDynError, ValueError):
    def __init__(self, residual: float):
        self.residual = float(residual)
        super().__init__(f"H is not particle-hole symmetric under the given operator (residual {residual:.3e})")


class PositivityLost(NumericalFailure):
    def __init__(self, t: float, detail: str = ""):
        self.t = float(t)
        msg = f"positivity lost at t = {t:.6g}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class NormUnderflow(NumericalFailure):
    def __init__(self, t: float):
        self.t = float(t)
        super().__init__(f"trace underflow at t = {t:.6g}; the no-jump state has fully decayed")


class ConfigError(NHDynError, ValueError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
