"""Exception and warning types shared across the package."""


class HodgeLabError(Exception):
    """Base class for all library errors."""


class DegreeError(HodgeLabError, ValueError):
    """A form degree is out of range for the requested operation."""


class GridError(HodgeLabError, ValueError):
    """Forms live on incompatible grids, or a grid is malformed."""


class ExponentError(HodgeLabError, ValueError):
    """An integrability exponent lies outside the admissible range."""


class ResolutionError(HodgeLabError, ValueError):
    """A sequence parameter is too fine for the grid to resolve."""


class ShapeError(HodgeLabError, ValueError):
    """Matrix-of-forms shapes do not agree."""


class GateError(HodgeLabError, ValueError):
    """An experiment refused to run below its admissible exponent."""


class ConfigError(HodgeLabError, ValueError):
    """An experiment configuration could not be parsed or validated."""


class HypothesisWarning(UserWarning):
    """A numerically checked hypothesis did not show the required decay."""
