"""Exception and warning types shared across the toolkit."""


class MpsegError(Exception):
    """Base class for all mpseg validation and processing errors."""


# taxonomy
class UnknownClassName(MpsegError):
    pass


class EmptyLabelSet(MpsegError):
    pass


# dataset ingestion
class MalformedFile(MpsegError):
    pass


class SchemaViolation(MpsegError):
    pass


class DanglingImageRef(MpsegError):
    pass


class DegeneratePolygon(MpsegError):
    pass


class UnknownImage(MpsegError):
    pass


class BadFoldCount(MpsegError):
    pass


# metrics
class ShapeMismatch(MpsegError):
    pass


class NoGroundTruthClasses(MpsegError):
    pass


class LengthMismatch(MpsegError):
    pass


# probability stacks / fusion
class EmptyEnsemble(MpsegError):
    pass


class ClassListMismatch(MpsegError):
    pass


class ClassOutsideList(MpsegError):
    pass


# backends
class MissingStack(MpsegError):
    pass


class CorruptStack(MpsegError):
    pass


class MaskOutsideImage(MpsegError):
    pass


class EmptyMask(MpsegError):
    pass


# refinement
class NonLcaClassInMask(MpsegError):
    pass


class NoRefiners(MpsegError):
    pass


# augment / synth / pipeline
class BadRange(MpsegError):
    pass


class BadConfig(MpsegError):
    pass


class IoFailure(MpsegError):
    pass


class PipelineStageError(MpsegError):
    """A backend or processing error annotated with the pipeline stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause


class OverlapWarning(UserWarning):
    """Annotations painted the same pixel more than once within one image."""

    def __init__(self, image_id, pixels):
        super().__init__(
            f"image {image_id}: {pixels} pixel(s) painted more than once"
        )
        self.image_id = image_id
        self.pixels = pixels


class ImageWithoutLabels(UserWarning):
    """An image with no annotations was skipped by a per-image statistic."""

    def __init__(self, image_id):
        super().__init__(f"image {image_id} has no annotations; skipped")
        self.image_id = image_id
