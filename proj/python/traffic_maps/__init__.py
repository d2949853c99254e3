"""Parallel-update exclusion process on rings: dynamics, invariant Markov measures and velocities."""

from ._traffic import *  # noqa: F401,F403
from ._traffic import DomainError, AdmissibilityError  # noqa: F401
