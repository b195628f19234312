"""No extern logic: both services bind runtime builtins."""

HANDLERS = {}
