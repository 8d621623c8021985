"""Exception hierarchy shared across the package."""


class CorpusCrawlError(Exception):
    pass


class ValidationError(CorpusCrawlError, ValueError):
    pass


class NotFoundError(CorpusCrawlError, LookupError):
    pass


class StaleLeaseError(CorpusCrawlError):
    """The resource is leased to someone else; our lease expired and was re-acquired."""


class InvalidStateError(CorpusCrawlError):
    pass


class PlatformError(CorpusCrawlError):
    """Transient failure talking to the video platform."""


class VideoNotFoundError(PlatformError, NotFoundError):
    pass


class SubtitleFormatError(CorpusCrawlError, ValueError):
    pass


class EmptyAudioError(CorpusCrawlError, ValueError):
    pass
