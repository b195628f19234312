"""No extern logic: the reporter binds the runtime's average builtin."""

HANDLERS = {}
