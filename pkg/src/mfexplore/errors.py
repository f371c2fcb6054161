"""Exception types raised across the package."""


class MfExploreError(Exception):
    """Base class for package errors."""


class WorldGenerationError(MfExploreError):
    """Procedural generation could not satisfy the world constraints."""

    def __init__(self, seed: int, message: str):
        super().__init__(f"world generation failed for seed {seed}: {message}")
        self.seed = seed


class WorldFormatError(MfExploreError):
    """A world directory failed validation; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"invalid world file ({field}): {message}")
        self.field = field


class FloorMismatchError(MfExploreError):
    """Sensor frame and map belong to different floors."""


class NoTraversableSource(MfExploreError):
    """All requested distance-field sources are non-traversable."""


class UnreachableStart(MfExploreError):
    """Path extraction started on a cell the field never reached."""


class NoFrontier(MfExploreError):
    """No frontier edge is available; floor completion candidate."""


class NoUnvisitedStair(MfExploreError):
    """Current floor has no unvisited stair edge."""


class TreeGrowthFailed(MfExploreError):
    """RRT sampling could not grow the requested number of nodes."""


class BridgeTimeout(MfExploreError):
    """The external policy endpoint did not answer within the timeout."""


class MalformedResponse(MfExploreError):
    """The external policy endpoint sent an invalid message."""


class ConfigError(MfExploreError):
    """Invalid CLI/batch configuration."""
