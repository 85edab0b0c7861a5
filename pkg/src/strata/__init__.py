"""Layered heteroclinic, homoclinic and brake-orbit solutions of a vector Allen-Cahn system.

The package computes one-dimensional minimal heteroclinic connections of a
symmetric double-well potential, then minimizes a renormalized action on a
strip to obtain two-dimensional solutions at a chosen energy level.
"""
from .config import RunConfig, parse_config
from .errors import (
    ConfigError,
    ConvergenceError,
    HypothesisError,
    StrataError,
)
from .potential import Potential, estimate_constants
from .profile1d import Grid1D, Profile, build_atlas, minimize, symmetrize
from .strip2d import Grid2D, minimize_strip

__version__ = "0.1.0"
