"""polguard: polarization-randomized two-way QKD simulator and attack analysis."""

from polguard._backend import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
