"""Exception hierarchy shared across the toolkit."""


class CctError(Exception):
    """Base class for all toolkit errors."""


# --- dataset / record layer ---

class MalformedRecord(CctError):
    def __init__(self, line: int, reason: str = ""):
        self.line = line
        self.reason = reason
        super().__init__(f"malformed record at line {line}: {reason}")


class TruncatedInput(CctError):
    """Final dataset line is missing its newline terminator."""


class EmptyInput(CctError):
    pass


class InputError(CctError):
    pass


class IoFailure(CctError):
    pass


# --- provider layer ---

class ProviderError(CctError):
    """Base class for errors raised by a cryptographic provider.

    These are the errors that the fleet harness records as
    SampleRecord.error rather than propagating.
    """


class KeyGenFailure(ProviderError):
    pass


class ImportFailure(ProviderError):
    pass


class SignFailure(ProviderError):
    pass


class InvalidKeyBlob(ProviderError):
    pass


class InvalidKey(ProviderError):
    pass


class DecryptPaddingFailure(ProviderError):
    pass


class BlockSizeFailure(ProviderError):
    def __init__(self, message: str, code: int = -1):
        self.code = code
        super().__init__(message)


# --- analysis layer ---

class MalformedArtifact(CctError):
    pass


class NotInvertible(CctError):
    pass


class DecodeFailure(CctError):
    pass


class MalformedPoint(CctError):
    pass


class InsufficientData(CctError):
    def __init__(self, what: str, needed: int, have: int):
        self.what = what
        self.needed = needed
        self.have = have
        super().__init__(f"{what}: need {needed}, have {have}")


class DegenerateVariance(CctError):
    pass


class EmptyBucket(CctError):
    def __init__(self, threshold):
        self.threshold = threshold
        super().__init__(f"no samples below threshold {threshold}")


class MissingDenylist(CctError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"denylist unavailable: {path}")
