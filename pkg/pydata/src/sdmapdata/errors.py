"""Error types raised by the readers."""


class SchemaError(ValueError):
    """An artifact violates its documented format."""


class NotADirectory(OSError):
    """The scene root passed to iter_scenes is not a directory."""
