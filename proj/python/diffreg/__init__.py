"""Differentiable DRR rendering and 2D/3D rigid registration."""

from ._core import *  # noqa: F401,F403
from ._core import (
    DegenerateInput,
    IllConditioned,
    IoError,
    InvalidArgument,
    Intrinsics,
    Volume,
)

__version__ = "0.1.0"
