"""
Error Hierarchy

Every failure the toolkit reports is a VPError subclass carrying the process exit code
the command line surface returns for it.
"""


class VPError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 1


class ConfigError(VPError):
    """Invalid or unresolvable run configuration."""


class IoError(VPError):
    """Missing, unreadable or unwritable file."""

    exit_code = 2


class FormatError(VPError):
    """File exists but its encoding is not supported."""

    exit_code = 2


class ManifestError(VPError):
    """Dataset manifest cannot be parsed; carries line and field diagnostics."""

    exit_code = 2

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class NoEvidence(VPError):
    """The filtered Hough grid holds no votes."""

    exit_code = 3


class InfeasibleSpec(VPError):
    """A synthetic scene spec cannot be realized."""

    exit_code = 3


class CacheMismatch(VPError):
    """A mapping cache was built for a different configuration."""

    exit_code = 4


class CorruptCache(VPError):
    """A mapping cache has a bad magic, version, length or checksum."""

    exit_code = 4


class DimensionMismatch(VPError):
    """Array dimensions disagree with the declared parameters."""


class IndexOutOfRange(VPError, IndexError):
    """A bin or lattice index is outside its valid range."""


class InvalidCount(VPError):
    """A sample count is out of range."""


class DegenerateLine(VPError):
    """Two lifted rays are parallel, so the line has no plane normal."""


class ParamsMismatch(VPError):
    """A Hough grid and a mapping table disagree on their parameters."""


class InsufficientCandidates(VPError):
    """Too few vanishing point candidates to form a Manhattan triple."""


class EmptyPatch(VPError):
    """A local sphere patch contains no sample points."""


class EmptyInput(VPError):
    """A metric was asked to aggregate an empty input."""


class DegenerateFamily(VPError):
    """A line family does not constrain a vanishing direction."""
