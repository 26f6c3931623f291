from .schedule import (
    DiffusionSchedule, cosine_schedule, forward_noise, posterior_coefficients,
    posterior_step,
)
from .masking import (
    FrameMask, goal_mask, interaction_goal_mask, mask_inputs, pin_masked,
    start_only_mask,
)
from .guidance import (
    GuidanceConfig, apply_guidance, collision2d_objective, goal_objective,
    penetration3d_objective, penetration_objective_joints, proxy_points,
)
from .blend import BlendSpec, blend
from .sampling import SampleResult, SceneContext, sample, sample_batch
