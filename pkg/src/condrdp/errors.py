class InputError(ValueError):
    """Invalid user input: bad domain, malformed distribution, bad file."""


class DimensionError(InputError):
    """Alphabet sizes of two objects do not agree."""


class InstanceTooLargeError(InputError):
    """A brute-force routine was asked for an instance beyond its budget."""
