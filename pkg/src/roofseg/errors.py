"""Exception hierarchy shared by all roofseg modules."""


class RoofSegError(Exception):
    """Base class for library errors."""


class DegenerateInput(RoofSegError):
    """Too few points, or points that do not span a plane."""


class InvalidSpec(RoofSegError, ValueError):
    pass


class MissingGroundTruth(RoofSegError):
    pass


class EmptyInstance(RoofSegError):
    pass


class LabelOutOfRange(RoofSegError, ValueError):
    pass


class LengthMismatch(RoofSegError, ValueError):
    pass


class NoInstances(RoofSegError):
    pass


class TooManyInstances(RoofSegError):
    pass


class NoClusters(RoofSegError):
    """Clustering produced nothing to refine against."""


class BothEmpty(RoofSegError, ValueError):
    pass


class EmptyGroundTruth(RoofSegError):
    pass


class EmptyList(RoofSegError, ValueError):
    pass


class FormatError(RoofSegError):
    """Malformed interchange file.  ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class ConfigError(RoofSegError, ValueError):
    pass
