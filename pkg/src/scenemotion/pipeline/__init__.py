from .goals import goal_near_object
from .lifting import KinematicLifter, LiftingBackend, check_lift_contract
from .runner import (
    ChainAction, ChainResult, InteractionResult, NavigationRequest,
    NavigationResult, chain, interact, navigate, transformed_chair,
)
