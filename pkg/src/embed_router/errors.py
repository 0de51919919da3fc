"""Exception hierarchy shared across the package."""


class EmbedRouterError(Exception):
    """Base class for all errors raised by this package."""


class InputShapeError(EmbedRouterError):
    """An input vector or matrix has the wrong dimensions."""


class EmptyDatasetError(EmbedRouterError):
    """A training or centroid-building call received no samples."""


class DivergenceError(EmbedRouterError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"non-finite loss at epoch {epoch}")


class ZeroEmbeddingError(EmbedRouterError):
    """A nonzero input collapsed to the all-zero embedding (dead hidden layer)."""


class FormatError(EmbedRouterError):
    """A binary file (IDX dataset, model, or centroid index) is malformed."""


class EmptyInputError(EmbedRouterError):
    """An operation that needs at least one element received none."""


class ParamError(EmbedRouterError):
    """A generator or config parameter is out of its valid range."""


class StratificationError(EmbedRouterError):
    """A class has too few samples to be split across server and clients."""


class ZeroVectorError(EmbedRouterError):
    """Cosine similarity is undefined for a zero-norm vector."""


class MissingClassError(EmbedRouterError):
    """A dataset is missing samples for one of its declared classes."""


class EmptyIndexError(EmbedRouterError):
    """An assignment was requested against an index with no experts."""


class ProtocolError(EmbedRouterError):
    """A wire frame or payload violates the protocol grammar."""


class TruncationError(ProtocolError):
    """A frame or payload ended before its declared length."""


class SizeError(ProtocolError):
    """A frame declares a payload larger than the protocol allows."""


class ServerError(EmbedRouterError):
    """The registry server answered with an error frame."""

    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(f"server error {code}: {message}")


class ConfigError(EmbedRouterError):
    """An experiment or CLI configuration is invalid."""
