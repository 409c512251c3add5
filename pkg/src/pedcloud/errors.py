"""Exception types raised across the toolkit."""


class PedcloudError(Exception):
    """Base class for all pedcloud errors."""


class ParseError(PedcloudError):
    """A file or byte stream violates its expected format."""


class SchemaVersionError(ParseError):
    """A document declares a schema version this build does not understand."""


class BehindCameraError(PedcloudError):
    """A 3D point projects with non-positive depth and has no pixel image."""


class MissingScoreError(PedcloudError, ValueError):
    """Confidence filtering was asked for on boxes that carry no score."""


class EmptyInputError(PedcloudError, ValueError):
    """An operation that needs at least one element received none."""


class InvalidFractionError(PedcloudError, ValueError):
    """A pixel fraction outside the open interval (0, 1)."""


class InfeasibleError(PedcloudError):
    """Box sampling could not produce an in-range dimension within the attempt budget."""


class GenerationExhaustedError(PedcloudError):
    """Constrained box generation ran out of attempts.

    Carries the boxes accepted before giving up in ``boxes``.
    """

    def __init__(self, message, boxes):
        super().__init__(message)
        self.boxes = list(boxes)


class TooFewPointsError(PedcloudError, ValueError):
    """A sampler was asked for more points than the cloud contains."""


class DegenerateClusterError(PedcloudError):
    """All points coincide, so unit-sphere normalization has zero scale."""


class ShapeError(PedcloudError):
    """Arrays do not match the shapes the network configuration implies."""


class NonFiniteActivationError(PedcloudError):
    """The forward pass produced NaN or infinite activations."""


class EmptyDatasetError(PedcloudError, ValueError):
    """Training or evaluation received an empty dataset."""


class DivergedLossError(PedcloudError):
    """Training aborted because the loss became non-finite."""

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class UnknownSceneError(PedcloudError, ValueError):
    """A requested test scene does not appear in the manifest."""


class UnknownClassError(PedcloudError, ValueError):
    """A positive class name does not appear in the data being regrouped."""


class NotFoundError(PedcloudError, KeyError):
    """A cluster id is not present in the manifest."""


class InvalidDecisionError(PedcloudError, ValueError):
    """A review verdict used a decision outside {accepted, rejected}."""
