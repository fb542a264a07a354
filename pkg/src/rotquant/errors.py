"""Exception types shared across the package."""


class RotquantError(Exception):
    """Base class for all package-specific errors."""


class CodecError(RotquantError):
    """Malformed bitstream or symbol outside the codebook."""


class ConfigError(RotquantError):
    """Invalid or inconsistent quantizer/experiment parameters."""
