"""Error taxonomy for the export tool."""


class EncoderExportError(Exception):
    """Base class; the CLI turns these into exit code 1."""


class ConfigError(EncoderExportError):
    pass


class ParseError(EncoderExportError):
    pass


class DataError(EncoderExportError):
    pass


class EncoderUnavailable(EncoderExportError):
    """The requested encoder cannot be loaded from local files."""
