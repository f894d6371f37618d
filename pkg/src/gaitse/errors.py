"""Exception hierarchy. Everything raised on bad data derives from GaitError."""


class GaitError(Exception):
    """Base class for data and validation errors."""


# -- recording ---------------------------------------------------------------


class ParseError(GaitError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownJoint(ParseError):
    def __init__(self, name, line=None):
        self.name = name
        super().__init__(f"unknown joint {name!r}", line)


class NonMonotonicTimestamp(ParseError):
    pass


class MissingField(ParseError):
    pass


class BadHeader(ParseError):
    pass


class ManifestError(GaitError):
    """One or more manifest rows failed; ``errors`` holds (filename, exception) pairs."""

    def __init__(self, message, errors=()):
        self.errors = list(errors)
        if self.errors:
            detail = "; ".join(f"{name}: {exc}" for name, exc in self.errors)
            message = f"{message}: {detail}"
        super().__init__(message)


class FileMissing(ManifestError):
    pass


class DuplicateTrialKey(ManifestError):
    pass


# -- preprocess --------------------------------------------------------------


class TooShortAfterTrim(GaitError):
    pass


class NoTurnDetected(GaitError):
    pass


# -- entropy -----------------------------------------------------------------


class SeriesTooShort(GaitError):
    pass


class NonPositiveTolerance(GaitError):
    pass


class ZeroVariance(GaitError):
    pass


class ChannelError(GaitError):
    """Wraps a per-channel failure while building a profile."""

    def __init__(self, channel, cause):
        self.channel = channel
        self.cause = cause
        super().__init__(f"channel {channel}: {cause}")


# -- stats -------------------------------------------------------------------


class ReplicateMismatch(GaitError):
    pass


class MissingChannel(GaitError):
    def __init__(self, channel, where=""):
        self.channel = channel
        suffix = f" in {where}" if where else ""
        super().__init__(f"missing channel {channel}{suffix}")


class UndefinedSe(GaitError):
    def __init__(self, channel, trial=""):
        self.channel = channel
        self.trial = trial
        suffix = f" (trial {trial})" if trial else ""
        super().__init__(f"sample entropy undefined for {channel}{suffix}")


class UnbalancedDesign(GaitError):
    pass


class InsufficientReplication(GaitError):
    pass


class NegativeEstimateTruncated(UserWarning):
    """A method-of-moments variance estimate was negative and set to zero."""


# -- classify ----------------------------------------------------------------


class ClassTooSmall(GaitError):
    pass


class NonBinaryLabels(GaitError):
    pass


class LengthMismatch(GaitError):
    pass


class EmptyFeatureSet(GaitError):
    pass
