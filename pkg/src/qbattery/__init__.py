"""Dissipative spin-chain quantum battery simulator."""

__version__ = "0.1.0"

from .hilbert import SpaceLayout
from .model import ChargeSpec, ModelSpec
from .lindblad import EvolutionConfig

__all__ = ["SpaceLayout", "ChargeSpec", "ModelSpec", "EvolutionConfig", "__version__"]
