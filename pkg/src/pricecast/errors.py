"""Exception types shared across the toolkit."""


class PricecastError(Exception):
    """Base class for all toolkit errors."""


class InvalidRecordError(PricecastError):
    """A raw input row violates its schema (bad price, quantity, timestamp)."""


class InvalidQuoteError(InvalidRecordError):
    """A competitor quote or price pair is out of domain (non-positive)."""


class EmptySeriesError(PricecastError):
    """No usable observations remain after cleaning."""


class IneligibleError(PricecastError):
    """Product failed the eligibility gate."""

    def __init__(self, report):
        self.report = report
        super().__init__("product is not eligible: " + "; ".join(report.reasons))


class FitError(PricecastError):
    """Model estimation failed (degenerate innovation, bad hyperparameters)."""


class ForecastError(PricecastError):
    """Forecast request cannot be honoured (bad horizon, missing assumptions)."""


class OptimizeError(PricecastError):
    """Pricing problem is malformed (shape mismatch, bad inventory)."""


class NotFoundError(PricecastError):
    """Model store has no entry for the requested product or version."""


class ParseError(PricecastError):
    """A stored model document failed to parse; the offending file is named."""

    def __init__(self, path, cause):
        self.path = path
        super().__init__(f"cannot parse model file {path}: {cause}")


class PipelineError(PricecastError):
    """A pipeline stage failed; carries the stage name for diagnostics."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
