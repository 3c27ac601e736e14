class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class ContractError(ValueError):
    """A call violates an operation's preconditions (wrong nesting level, degenerate inverse, ...)."""
