"""Error types raised across the discovery pipeline."""


class DiscoveryError(Exception):
    """Base class for everything this package raises on purpose."""


class MalformedRow(DiscoveryError):
    """A CSV row does not match the documented schema."""


class DuplicateDeviceId(DiscoveryError):
    """Two catalog rows share a device_id."""


class DanglingOwner(DiscoveryError):
    """A friendship row references an owner no device belongs to."""


class InsufficientPopulation(DiscoveryError):
    """Fewer eligible devices than the requested sample size."""


class UnknownDevice(DiscoveryError):
    """A device id that is not a node of the graph at hand."""


class DivergedTraining(DiscoveryError):
    """Loss became NaN or infinite during embedding training."""


class TooFewPoints(DiscoveryError):
    """Clustering asked for more clusters than there are points."""


class NoCandidates(DiscoveryError):
    """Lookup produced an empty candidate set."""


class AllUnreachable(DiscoveryError):
    """No lookup candidate has a finite social distance to the requester."""


class EmptyPairSet(DiscoveryError):
    """Accuracy evaluation received no pairs."""
