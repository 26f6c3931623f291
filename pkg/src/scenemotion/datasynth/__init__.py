from .scenes import SceneSpec, generate_scene, mirror_scene, walkable_connected
from .locomotion import STYLE_PARAMS, generate_locomotion
from .walker import assemble_body_frames, build_world_joints, lift_trajectory, reverse_motion
from .placement import (
    PlacementRecord, mirror_motion, mirror_style_label, mirror_trajectory,
    mirror_transform, place_motion, placement_collision_free,
)
from .interaction import (
    INTERACTION_STYLES, approach_pose, generate_interaction, seat_pelvis_pose,
)
from .corpus import (
    COND_CELL, CorpusConfig, CorpusResult, build_corpus, canonical_floor_grid,
    corpus_motion, corpus_scene, load_corpus,
)
