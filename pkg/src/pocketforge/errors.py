"""Exception hierarchy shared by every module; exit codes match the CLI contract."""


class PocketForgeError(Exception):
    """Base class for all pocketforge errors."""

    exit_code = 1


class ValidationError(PocketForgeError):
    """Bad input data: degenerate geometry, inconsistent fields, unparseable values."""

    exit_code = 1


class InfeasibleError(PocketForgeError):
    """Geometrically valid input that admits no solution (no insertable tool, no plunge room)."""

    exit_code = 2
