"""Exception hierarchy.

``ValidationError`` covers bad inputs (domain errors, malformed files, invalid
configs); the CLI maps it to exit status 2. ``AnalysisError`` covers numerical
failures on otherwise valid input and maps to exit status 1.
"""


class WgmError(Exception):
    pass


class ValidationError(WgmError, ValueError):
    pass


class AnalysisError(WgmError):
    pass


class NoResonanceError(AnalysisError):
    pass


class DegenerateFitError(AnalysisError):
    pass


class ModeNotFoundError(AnalysisError):
    pass


class UnconfinedModeError(AnalysisError):
    pass


class QuadratureError(AnalysisError):
    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved relative tolerance {achieved:.3e})")
        self.achieved = achieved


class UnidentifiableError(AnalysisError):
    pass
