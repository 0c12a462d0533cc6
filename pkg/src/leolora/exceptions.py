"""Shared exception types."""

from __future__ import annotations


class ConfigError(ValueError):
    """A configuration value is outside its legal range."""


class ContractError(RuntimeError):
    """A caller violated an operation's precondition."""


class ValidationError(ValueError):
    """Scenario validation failed; carries every violation found."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
