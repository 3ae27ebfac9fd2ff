"""Frequency-multiplexed three-party quantum secret sharing: protocol simulation,
interferometer locking and key-rate modelling over DWDM networks."""

from . import grid, linkbudget, mzi, protocol, qstate

__all__ = ["grid", "linkbudget", "mzi", "protocol", "qstate"]
__version__ = "0.1.0"
