"""Scene-aware, style-conditioned human trajectory and interaction generation.

A desk-scale engine built around a two-branch denoising-diffusion model:
a scene-agnostic base denoiser plus a zero-initialized scene-aware control
branch, with goal in-painting, analytic test-time guidance against floor
maps and object SDFs, user-path blending, procedural training data and
geometric evaluation metrics.
"""

__version__ = "0.1.0"

from . import core, datasynth, denoiser, eval, geometry, pipeline, sampler
from .errors import (
    PlacementError, SceneMotionError, TrainingError, UnreachableError,
    ValidationError,
)
