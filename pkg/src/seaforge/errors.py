"""Exception hierarchy."""


class SeaforgeError(Exception):
    pass


class DegenerateInputError(SeaforgeError, ValueError):
    pass


class PoleProximityError(SeaforgeError, ValueError):
    def __init__(self, omega: float):
        super().__init__(f"evaluation frequency {omega!r} rad/s sits on a pole")
        self.omega = omega


class PoleInBandError(SeaforgeError, ValueError):
    def __init__(self, omega: float, item: str | None = None):
        where = f" (spec item {item!r})" if item else ""
        super().__init__(f"imaginary-axis pole at {omega!r} rad/s inside the band{where}")
        self.omega = omega
        self.item = item


class IllPosedLoopError(SeaforgeError, ValueError):
    pass


class ImproperError(SeaforgeError, ValueError):
    pass


class ValidationError(SeaforgeError, ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NoStabilizerError(SeaforgeError):
    def __init__(self, best_abscissa: float):
        super().__init__(f"no stabilizing controller found (best spectral abscissa {best_abscissa:.6g})")
        self.best_abscissa = best_abscissa


class SynthesisError(SeaforgeError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UnstableLoopError(SeaforgeError):
    pass
