class SdtwError(ValueError):
    """Base class for every error raised by this package."""


class ShapeError(SdtwError):
    pass


class NonFiniteError(SdtwError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"non-finite entry at index {index}")


class ConfigError(SdtwError):
    pass


class UnreachableEndError(SdtwError):
    """The end cell of the DP table was never reached (bandwidth too narrow)."""


class IncompleteTableError(SdtwError):
    pass


class LedgerUnderflowError(SdtwError):
    pass


class OutOfMemoryError(SdtwError, MemoryError):
    def __init__(self, requested, live=0, limit=None):
        self.requested = requested
        self.live = live
        self.limit = limit
        msg = f"cannot allocate {requested} bytes"
        if limit is not None:
            msg += f" (live {live}, limit {limit})"
        super().__init__(msg)
