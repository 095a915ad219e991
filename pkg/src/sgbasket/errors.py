"""Exception taxonomy shared by the library, service, and CLI.

Each class corresponds to one failure category with a stable short name,
so the HTTP layer can map errors to an envelope and the CLI to exit codes
without string matching.
"""

from __future__ import annotations


class SGBasketError(Exception):
    """Base class for all package errors."""

    kind = "internal"


class ConfigError(SGBasketError):
    """Invalid or inconsistent user input (parameters, config files)."""

    kind = "config"


class FeasibilityError(SGBasketError):
    """The transform/regularizer feasibility condition failed.

    Raised before any pricing work starts when the a-priori bound fails,
    or during a run if a propagated point drives the boundary regularizer
    below the floor it was checked against.
    """

    kind = "feasibility"


class ResourceCapError(SGBasketError):
    """A requested computation exceeds a configured size cap."""

    kind = "resource"


class NumericalError(SGBasketError):
    """Overflow, non-finite intermediate, or a failed numerical sanity check."""

    kind = "numerical"


EXIT_CODES = {
    "config": 2,
    "feasibility": 3,
    "resource": 4,
    "numerical": 5,
    "internal": 1,
}
