"""Exception hierarchy for riskdex."""


class RiskdexError(Exception):
    """Base class for all library errors."""


class DomainError(RiskdexError, ValueError):
    """A wealth level lies outside the utility's domain."""


class InvalidGamble(RiskdexError, ValueError):
    """Distribution does not qualify as a gamble (mean <= 0 or no loss mass)."""


class SupportOutsideDomain(RiskdexError):
    """Non-negligible outcome mass leaves the utility domain."""


class NonFinite(RiskdexError, ArithmeticError):
    """An integrand or objective overflowed to a non-finite value."""


class NotYetAGamble(RiskdexError):
    """The marginal at this horizon is not (or not yet) a gamble."""


class UnsupportedHorizon(RiskdexError, ValueError):
    """Requested horizon exceeds the process' declared t_max."""


class InsufficientGrid(RiskdexError, ValueError):
    """A t-grid is too short for limit estimation."""


class NonpositiveExcessDrift(RiskdexError, ValueError):
    """Initial drift does not exceed the risk-free drift."""


class PrerequisiteRankingFailed(RiskdexError):
    """Agents do not disagree at the jump level; no reversal to demonstrate."""


class BracketError(RiskdexError):
    """Root bracket could not be established."""
