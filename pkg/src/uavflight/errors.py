"""Exception types shared across the solvers and the CLI."""


class InfeasibleError(ValueError):
    """A data requirement cannot be met with the available energy or geometry."""

    def __init__(self, message, *, sensor_index=None, threshold=None):
        super().__init__(message)
        self.sensor_index = sensor_index
        self.threshold = threshold


class ConditionViolatedError(ValueError):
    """Speed is below the minimum for which the water-filling power stays positive."""


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario input."""

    def __init__(self, message, *, path=None, line=None, offenders=None):
        super().__init__(message)
        self.path = path
        self.line = line
        self.offenders = offenders or []
