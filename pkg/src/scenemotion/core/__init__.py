from .types import (
    ABS_SLICE, ANG_VEL_INDEX, BODY_WIDTH, CONTACT_SLICE, DEFAULT_STYLES,
    HEIGHT_INDEX, JOINT_POS_SLICE, JOINT_ROT_SLICE, JOINT_VEL_SLICE,
    LIN_VEL_SLICE, NUM_JOINTS, ROOT_WIDTH, UNCONDITIONED, BodyMotion,
    BodyPose, GoalSpec, RigidTransform2D, RootPose, RootTrajectory,
    Skeleton, StyleVocabulary, default_skeleton, heading_angle, wrap_angle,
)
from .codec import (
    canonicalize_body_frames, canonicalize_trajectory, decode_pose_vector,
    encode_pose_vector, heading_rot6d, joints_to_local, joints_world,
    normalize_heading, normalize_heading_rows, rotate_local_to_world,
    rotate_world_to_local,
)
from .motion_io import (
    load_motion, motion_from_bytes, motion_to_bytes, motion_to_csv, save_motion,
)
