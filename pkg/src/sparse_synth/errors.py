"""Exception types. Each carries the process exit code used by the CLI."""


class SynthError(Exception):
    exit_code = 1


class DomainError(SynthError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 2


class ConfigError(SynthError, ValueError):
    exit_code = 2


class SolverError(SynthError, RuntimeError):
    exit_code = 3


class PencilError(SolverError):
    """Degenerate pencil or rank-deficient Vandermonde fit."""


class InfeasibleError(SolverError):
    exit_code = 4

    def __init__(self, message, iteration=None, residuals=None):
        super().__init__(message)
        self.iteration = iteration
        self.residuals = residuals or {}
