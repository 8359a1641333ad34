"""Universal distribution of persistence ratios: samplers, filtrations,
persistent homology, π/ℓ statistics, signal testing and an experiment harness."""

__version__ = "0.1.0"

from .errors import UniPersError  # noqa: F401
