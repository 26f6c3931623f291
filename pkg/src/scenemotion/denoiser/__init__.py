from .model import (
    DenoiserConfig, DenoiserParams, backward, encode_floor_map, forward,
    init_base_params, init_control_params, input_gradient, map_grid_coords,
    merge_object_features, params_hash, scene_feature_lookup, t_embedding,
)
from .train import (
    SceneBatchBuilder, TrainSettings, compute_standardization, eval_loss,
    finetune_control, train_base,
)
from .checkpoint import (
    checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint,
)
from .nn import Adam
