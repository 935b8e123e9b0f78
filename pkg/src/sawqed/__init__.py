"""Surface-acoustic-wave quantum transducer toolkit.

Modules: materials, rayleigh, zeropoint, cavity, couplings, dynamics, cli.
"""

__version__ = "0.1.0"

from .errors import (CatalogError, InfeasibleDesignError, IntegrationError,  # noqa: F401
                     NotFoundError, NotPiezoelectricError, SawqedError, SolverError)
