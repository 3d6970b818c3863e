"""Exception types shared across the package."""


class EdgeplaceError(Exception):
    """Base class for all package-specific errors."""


class ScenarioFormatError(EdgeplaceError):
    """A scenario/scheme/config document could not be parsed.

    Carries a human-readable message naming the offending field path
    (and the line, when the underlying parser provides one).
    """


class UnservableMicroserviceError(EdgeplaceError):
    """A latency query hit a microservice with zero deployed instances."""

    def __init__(self, app: int, pos: int):
        self.app = app
        self.pos = pos
        super().__init__(f"microservice (app={app}, pos={pos}) has no instances")


class EnumerationInfeasibleError(EdgeplaceError):
    """Path enumeration would exceed the configured path-count cap."""


class UndersizedClusterError(EdgeplaceError):
    """The cluster cannot feasibly host the requested workload.

    Raised when total resources cannot cover one instance of every
    microservice, or when a bounded search finds no feasible scheme.
    """


class SearchSpaceError(EdgeplaceError):
    """Exhaustive search space exceeds the configured state cap."""
