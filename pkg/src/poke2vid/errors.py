"""Exception types shared across the toolkit."""


class Poke2VidError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(Poke2VidError):
    """Input violates a shape, range, or format contract."""


class IngestionError(Poke2VidError):
    """A dataset manifest entry could not be loaded."""


class FlowError(Poke2VidError):
    """A flow provider failed to produce a displacement map."""


class SamplingError(Poke2VidError):
    """A poke could not be drawn (e.g. no foreground pixels). Callers skip the clip."""


class RolloutError(Poke2VidError):
    """A latent rollout produced non-finite values."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class SynthesisError(Poke2VidError):
    """Frame synthesis failed."""


class CheckpointError(Poke2VidError):
    """A checkpoint is missing, malformed, or inconsistent with its config."""


class ProtocolError(Poke2VidError):
    """An evaluation protocol precondition is unmet (e.g. too few test clips)."""


class PartialResultError(Poke2VidError):
    """Some samples of a multi-sample computation failed.

    Carries the indices of the failed samples so callers can report or retry them.
    """

    def __init__(self, message: str, failures: list[int]):
        super().__init__(message)
        self.failures = failures


class OverCapacityError(Poke2VidError):
    """The synthesis worker pool is saturated; retry later."""


class TrainingAborted(Poke2VidError):
    """Training hit a non-finite loss; diagnostics carried along."""

    def __init__(self, message: str, step: int, components: dict[str, float] | None = None):
        super().__init__(message)
        self.step = step
        self.components = components or {}
