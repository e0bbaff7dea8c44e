# errors.py
"""
Exception hierarchy for qroute

Infeasible purification decisions, unreachable destinations and denied
requests are ordinary return values. Exceptions are reserved for bad input,
bad configuration and broken invariants.
"""
from typing import Optional


class QRouteError(Exception):
    """Base class for all qroute errors"""


class ConfigError(QRouteError):
    """Invalid experiment or command configuration"""


class TopologyError(QRouteError):
    """Invalid graph construction (duplicate edge, self-loop, bad fidelity)"""


class TopologyParseError(TopologyError):
    """Malformed topology file; carries the offending line number"""

    def __init__(self, message: str, line_number: Optional[int] = None, path: Optional[str] = None):
        self.line_number = line_number
        self.path = path
        location = ""
        if path:
            location += f"{path}:"
        if line_number is not None:
            location += f"{line_number}:"
        super().__init__(f"{location} {message}".strip() if location else message)


class TopologyGenerationError(TopologyError):
    """Waxman generation could not produce a connected graph"""


class FidelityDomainError(QRouteError, ValueError):
    """Fidelity argument outside [0.5, 1)"""


class EnumerationLimitError(QRouteError):
    """Exhaustive enumeration would exceed the configured guard"""


class FidelityGuaranteeError(QRouteError):
    """A router produced a solution below its request threshold"""
