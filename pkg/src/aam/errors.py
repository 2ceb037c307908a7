"""Exception types shared across the package."""


class AamError(Exception):
    """Base class for all package-specific errors."""


class ModelError(AamError):
    """Malformed network model (duplicate ids, dangling endpoints, bad values)."""


class UnknownBranch(ModelError):
    def __init__(self, branch_ids):
        ids = sorted(branch_ids) if not isinstance(branch_ids, str) else [branch_ids]
        super().__init__(f"unknown branch id(s): {', '.join(ids)}")
        self.branch_ids = tuple(ids)


class UnknownBus(ModelError):
    def __init__(self, bus_ids):
        ids = sorted(bus_ids) if not isinstance(bus_ids, str) else [bus_ids]
        super().__init__(f"unknown bus id(s): {', '.join(ids)}")
        self.bus_ids = tuple(ids)


class IslandedNetwork(AamError):
    """The (possibly post-outage) network has more than one connected component."""

    def __init__(self, components):
        self.components = tuple(frozenset(c) for c in components)
        sizes = ", ".join(str(len(c)) for c in self.components)
        super().__init__(f"network splits into {len(self.components)} islands (sizes: {sizes})")


class AreaError(AamError):
    """Inconsistent monitored-area definition."""


class SingularInterior(AreaError):
    """Interior susceptance block is singular; area cannot be reduced to its boundary."""


class DegenerateArea(AreaError):
    """Boundary equivalent carries no through-susceptance between sending and receiving sides."""


class PatternError(AamError):
    """Transfer pattern is unusable (unbalanced or identically zero direction)."""


class EmptyCandidateSet(AamError):
    """Contingency candidate list is empty or reduces to nothing usable."""


class TooFewContingencies(AamError):
    """Not enough ranked contingencies to run the variability scan."""


class EmptyResults(AamError):
    """No usable contingency results to derive a threshold from."""


class NoBindingConstraint(AamError):
    """Transfer can grow without bound; no limited branch ever binds."""


class NoReachablePmu(AamError):
    def __init__(self, bus):
        super().__init__(f"no PMU bus is electrically reachable from {bus!r}")
        self.bus = bus


class UnresolvableBus(AamError):
    def __init__(self, bus, reason=""):
        msg = f"boundary bus {bus!r} has no measurement, estimate, or fallback"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)
        self.bus = bus


class FrameDecodeError(AamError):
    """Telemetry frame failed structural validation."""


class CrcMismatch(FrameDecodeError):
    """Frame checksum does not match its payload."""


class ConfigError(AamError):
    """Bad monitor/service configuration file."""
