"""Exception types shared across the pipeline.

Two broad families: ValidationError for bad inputs/configs/contracts
(CLI exit code 2) and RuntimeFailure for failures inside otherwise valid
runs (CLI exit code 3).
"""


class Ia1Error(Exception):
    pass


class ValidationError(Ia1Error):
    pass


class RuntimeFailure(Ia1Error):
    pass


# corpus ---------------------------------------------------------------

class LineCountMismatch(ValidationError):
    pass


class EmptyLine(ValidationError):
    pass


class InvalidEncoding(ValidationError):
    pass


class EmptyCorpus(ValidationError):
    pass


class TooFewPairs(ValidationError):
    pass


# perturbation ---------------------------------------------------------

class EmptyText(ValidationError):
    pass


class TooShort(ValidationError):
    """Sentence has too few tokens for the requested perturbation."""


class MalformedPerturbed(ValidationError):
    """Perturbed record does not contain exactly one placeholder."""


class UnmaskableSentence(ValidationError):
    """Sentence already contains the placeholder, so masking cannot stay invertible."""


# templates / dataset generation ---------------------------------------

class MissingPlaceholder(ValidationError):
    pass


class DuplicateTemplateId(ValidationError):
    pass


class GranularityMismatch(ValidationError):
    pass


class TaskMismatch(ValidationError):
    pass


class NoTemplateForTask(ValidationError):
    pass


class SchemaViolation(ValidationError):
    """File content violates the expected record schema (carries a line number when known)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# replay scheduling -----------------------------------------------------

class ReplayLargerThanSource(ValidationError):
    pass


class OddBatchSize(ValidationError):
    pass


class EmptyNewData(ValidationError):
    pass


# trainer ----------------------------------------------------------------

class EmptyData(ValidationError):
    pass


class IdOutOfRange(ValidationError):
    pass


class AllMasked(ValidationError):
    """No supervised positions: the loss mask selects nothing."""


class NonFiniteLoss(RuntimeFailure):
    """Training loss became NaN/inf; carries the step and offending example ids."""

    def __init__(self, step: int, example_ids: list[str]):
        self.step = step
        self.example_ids = example_ids
        super().__init__(f"non-finite loss at step {step} (examples: {', '.join(example_ids[:8])})")


# evaluation --------------------------------------------------------------

class UnknownLabel(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class NoTemplates(ValidationError):
    pass


class EmptyEvalSet(ValidationError):
    pass
