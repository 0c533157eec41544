class FairselError(Exception):
    exit_code = 3


class ConfigError(FairselError, ValueError):
    """Invalid experiment spec, manifest or override."""

    exit_code = 1


class DataError(FairselError, ValueError):
    """Unreadable, ragged or semantically invalid dataset."""

    exit_code = 2
