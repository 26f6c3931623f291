from .floor import (
    NO_OBSTACLE_CLAMP, DistanceField2D, FloorMap, distance_transform,
    query_field, query_field_many,
)
from .volume import (
    ObjectVolume, box_sdf, query_volume, query_volume_many,
    voxelize_box_object, voxelize_box_union, voxelize_mesh,
)
from .bps import (
    BPS_COUNT, BPS_RADIUS, BPS_SEED, BPSBasis, compute_human_bps,
    compute_human_bps_fast, compute_object_bps, make_basis, unit_ball_offsets,
)
from .astar import Path2D, astar_path, eroded_walkable, grid_shortest_cost, resample_polyline, string_pull
from .scene import (
    Scene, SceneObject, VolumeCache, build_object_volume, canonical_scene_bytes,
    decode_rle, encode_rle, load_scene, rasterize_floor, save_scene,
    scene_from_json, scene_id, scene_to_json, volume_from_bytes, volume_to_bytes,
)
