"""Two-branch conditional sequence denoiser.

A transformer encoder over frame tokens predicts the clean motion from a
noisy masked input. A structurally identical control branch consumes scene
features and feeds each of its layer outputs back into the base through
zero-initialized projections, so a freshly constructed control branch leaves
the base output bit-for-bit unchanged.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .nn import (
    F32, bilinear_lookup, bilinear_lookup_bwd, conv3x3_s2, conv3x3_s2_bwd,
    dense, dense_bwd, encoder_layer, encoder_layer_bwd, gelu, gelu_bwd,
    layernorm, layernorm_bwd, sinusoid_table, _acc,
)

MAPENC_CHANNELS = (8, 16)
MAPENC_STRIDE = 4  # two stride-2 convolutions


@dataclass(frozen=True)
class DenoiserConfig:
    pose_width: int  # 5 for root trajectories, 268 for full body
    max_frames: int = 100
    model_width: int = 128
    layers: int = 4
    heads: int = 4
    ffn_width: int = 0  # 0 -> 2 * model_width
    style_vocab_size: int = 8
    scene_feature_width: int = 32
    scene_mode: str = "none"  # "none" | "floor" | "object"
    object_token_width: int = 0  # set for object mode: pose + 2 * bps count

    def __post_init__(self):
        if self.model_width % self.heads != 0:
            raise ValidationError("model_width must be divisible by heads")
        if self.scene_mode not in ("none", "floor", "object"):
            raise ValidationError(f"unknown scene_mode {self.scene_mode!r}")
        if self.ffn_width == 0:
            object.__setattr__(self, "ffn_width", 2 * self.model_width)
        if self.scene_mode == "object" and self.object_token_width == 0:
            object.__setattr__(self, "object_token_width", self.pose_width + 2048)

    @property
    def feature_width(self) -> int:
        # motion channels concatenated with the binary mask channels
        return 2 * self.pose_width

    def to_json(self) -> dict:
        return {
            "pose_width": self.pose_width, "max_frames": self.max_frames,
            "model_width": self.model_width, "layers": self.layers,
            "heads": self.heads, "ffn_width": self.ffn_width,
            "style_vocab_size": self.style_vocab_size,
            "scene_feature_width": self.scene_feature_width,
            "scene_mode": self.scene_mode,
            "object_token_width": self.object_token_width,
        }

    @staticmethod
    def from_json(d: dict) -> "DenoiserConfig":
        return DenoiserConfig(**d)


def _init_dense(rng, fan_in: int, fan_out: int, params: dict, prefix: str, zero=False):
    if zero:
        params[prefix + ".W"] = np.zeros((fan_in, fan_out), dtype=F32)
    else:
        params[prefix + ".W"] = rng.normal(0.0, 1.0 / math.sqrt(fan_in),
                                           size=(fan_in, fan_out)).astype(F32)
    params[prefix + ".b"] = np.zeros(fan_out, dtype=F32)


def _init_layernorm(params: dict, prefix: str, width: int):
    params[prefix + ".g"] = np.ones(width, dtype=F32)
    params[prefix + ".b"] = np.zeros(width, dtype=F32)


def _init_encoder_stack(rng, params: dict, branch: str, cfg: DenoiserConfig):
    w = cfg.model_width
    for l in range(cfg.layers):
        p = f"{branch}.l{l}"
        _init_layernorm(params, p + ".ln1", w)
        for name in ("q", "k", "v", "o"):
            _init_dense(rng, w, w, params, f"{p}.attn.{name}")
        _init_layernorm(params, p + ".ln2", w)
        _init_dense(rng, w, cfg.ffn_width, params, p + ".ffn1")
        _init_dense(rng, cfg.ffn_width, w, params, p + ".ffn2")


def _init_conditioning(rng, params: dict, branch: str, cfg: DenoiserConfig):
    w = cfg.model_width
    params[f"{branch}.style.table"] = rng.normal(0, 0.02, size=(cfg.style_vocab_size, w)).astype(F32)
    _init_dense(rng, w, w, params, f"{branch}.t1")
    _init_dense(rng, w, w, params, f"{branch}.t2")


def init_base_params(cfg: DenoiserConfig, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    _init_dense(rng, cfg.feature_width, cfg.model_width, params, "base.in")
    _init_conditioning(rng, params, "base", cfg)
    _init_encoder_stack(rng, params, "base", cfg)
    _init_layernorm(params, "base.lnf", cfg.model_width)
    # zero output head: the fresh model predicts the standardized mean, so
    # the first-step reconstruction loss sits at E||x0||^2
    _init_dense(rng, cfg.model_width, cfg.pose_width, params, "base.out", zero=True)
    return params


def init_control_params(cfg: DenoiserConfig, seed: int) -> dict:
    if cfg.scene_mode == "none":
        raise ValidationError("control branch needs scene_mode 'floor' or 'object'")
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    if cfg.scene_mode == "floor":
        in_width = cfg.feature_width + cfg.scene_feature_width
        c1, c2 = MAPENC_CHANNELS
        _init_dense(rng, 9 * 1, c1, params, "mapenc.c1")
        _init_dense(rng, 9 * c1, c2, params, "mapenc.c2")
        _init_dense(rng, c2, cfg.scene_feature_width, params, "mapenc.c3")
    else:
        in_width = cfg.object_token_width
    _init_dense(rng, in_width, cfg.model_width, params, "ctrl.in")
    _init_conditioning(rng, params, "ctrl", cfg)
    _init_encoder_stack(rng, params, "ctrl", cfg)
    for l in range(cfg.layers):
        _init_dense(rng, cfg.model_width, cfg.model_width, params, f"zproj.l{l}", zero=True)
    return params


@dataclass
class DenoiserParams:
    """Weights of both branches plus the channel standardization stats."""

    config: DenoiserConfig
    base: dict = field(default_factory=dict)
    control: dict | None = None
    frozen_base: bool = False
    mean: np.ndarray | None = None  # (pose_width,)
    std: np.ndarray | None = None

    def merged(self) -> dict:
        return self.base if self.control is None else {**self.base, **self.control}

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def destandardize(self, x: np.ndarray) -> np.ndarray:
        return x * self.std + self.mean


def params_hash(params: dict, keys=None) -> str:
    h = hashlib.sha256()
    for k in sorted(keys if keys is not None else params.keys()):
        h.update(k.encode())
        h.update(np.ascontiguousarray(params[k]).tobytes())
    return h.hexdigest()


def t_embedding(t_idx: np.ndarray, width: int) -> np.ndarray:
    """Sinusoidal code of the diffusion step index, (B, width) float32."""
    t = np.asarray(t_idx, dtype=np.float64)[:, None]
    half = width // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half, dtype=np.float64) / max(half, 1))
    args = t * freqs[None, :]
    out = np.zeros((t.shape[0], width), dtype=np.float64)
    out[:, 0::2] = np.sin(args)[:, : (width + 1) // 2]
    out[:, 1::2] = np.cos(args)[:, : width // 2]
    return out.astype(F32)


def _prefix_token(p: dict, branch: str, t_idx, style_idx, width: int):
    tsin = t_embedding(t_idx, width)
    h1, c1 = dense(tsin, p[f"{branch}.t1.W"], p[f"{branch}.t1.b"])
    a1, cg = gelu(h1)
    h2, c2 = dense(a1, p[f"{branch}.t2.W"], p[f"{branch}.t2.b"])
    style = p[f"{branch}.style.table"][style_idx]
    return style + h2, (c1, cg, c2, style_idx)


def _prefix_token_bwd(dtok, cache, p, grads, branch: str, train: bool):
    c1, cg, c2, style_idx = cache
    if train:
        g = np.zeros_like(p[f"{branch}.style.table"])
        np.add.at(g, style_idx, dtok)
        _acc(grads, f"{branch}.style.table", g)
    da1 = dense_bwd(dtok, c2, grads, f"{branch}.t2", train)
    dh1 = gelu_bwd(da1, cg)
    dense_bwd(dh1, c1, grads, f"{branch}.t1", train)


def encode_floor_map(p: dict, grid: np.ndarray):
    """Run the strided conv encoder over one (H, W) walkability grid."""
    x = grid.astype(p["mapenc.c1.W"].dtype)[:, :, None]
    h1, c1 = conv3x3_s2(x, p["mapenc.c1.W"], p["mapenc.c1.b"])
    a1, g1 = gelu(h1)
    h2, c2 = conv3x3_s2(a1, p["mapenc.c2.W"], p["mapenc.c2.b"])
    a2, g2 = gelu(h2)
    feat, c3 = dense(a2, p["mapenc.c3.W"], p["mapenc.c3.b"])
    return feat, (c1, g1, c2, g2, c3)


def encode_floor_map_bwd(dfeat, cache, grads: dict):
    c1, g1, c2, g2, c3 = cache
    da2 = dense_bwd(dfeat, c3, grads, "mapenc.c3")
    dh2 = gelu_bwd(da2, g2)
    da1 = conv3x3_s2_bwd(dh2, c2, grads, "mapenc.c2")
    dh1 = gelu_bwd(da1, g1)
    conv3x3_s2_bwd(dh1, c1, grads, "mapenc.c1")


def map_grid_coords(positions: np.ndarray, origin, cell: float) -> np.ndarray:
    """Meters -> feature-grid coordinates for the strided conv encoder.

    Feature node i sits over input cell 4i, whose center is
    origin + (4i + 0.5) * cell.
    """
    u = (positions[:, 0] - (origin[0] + 0.5 * cell)) / (MAPENC_STRIDE * cell)
    v = (positions[:, 1] - (origin[1] + 0.5 * cell)) / (MAPENC_STRIDE * cell)
    return np.stack([u, v], axis=1)


def scene_feature_lookup(control_params: dict, grid: np.ndarray, origin, cell: float,
                         positions: np.ndarray) -> np.ndarray:
    """Encode a floor map and bilinearly sample the feature grid at positions.

    positions are (N, 2) pelvis projections in meters; out-of-grid positions
    clamp to the border. Returns (N, scene_feature_width) float32.
    """
    feat, _ = encode_floor_map(control_params, grid)
    uv = map_grid_coords(np.asarray(positions, dtype=np.float64), origin, cell)
    vals, _ = bilinear_lookup(feat, uv)
    return vals


def merge_object_features(control_params: dict, x_frame: np.ndarray,
                          b_frame: np.ndarray, b_o: np.ndarray) -> np.ndarray:
    """Project one frame's [pose; human-bps; object-bps] to a model token."""
    tok = np.concatenate([x_frame, b_frame, b_o]).astype(F32)
    w = control_params["ctrl.in.W"]
    if tok.shape[0] != w.shape[0]:
        raise ValidationError(f"merged token width {tok.shape[0]} != {w.shape[0]}")
    return tok @ w + control_params["ctrl.in.b"]


def forward(params: DenoiserParams, x_in: np.ndarray, t_idx, style_idx,
            scene=None, need_cache: bool = False):
    """Predict the clean motion (B, N, pose_width) from a noisy masked input.

    x_in: (B, N, 2 * pose_width) float32, motion plus mask channels.
    scene: None, or for floor mode a dict
        {"grids": [(H, W) array per item], "origins": [...], "cells": [...],
         "positions": (B, N, 2) meters}
    and for object mode {"tokens": (B, N, object_token_width) float32}.
    The control branch runs whenever both control weights and scene data are
    present.
    """
    cfg = params.config
    p = params.merged()
    b, n, fw = x_in.shape
    if fw != cfg.feature_width:
        raise ValidationError(f"input width {fw} != configured {cfg.feature_width}")
    if n != cfg.max_frames:
        raise ValidationError(f"{n} frames != configured {cfg.max_frames}")
    t_idx = np.asarray(t_idx, dtype=np.int64).reshape(b)
    style_idx = np.asarray(style_idx, dtype=np.int64).reshape(b)

    use_control = params.control is not None and scene is not None
    posenc = sinusoid_table(n, cfg.model_width)

    ctrl_outs = []
    ctrl_caches = []
    scene_cache = None
    if use_control:
        if cfg.scene_mode == "floor":
            feats = np.empty((b, n, cfg.scene_feature_width), dtype=p["mapenc.c1.W"].dtype)
            enc_caches = []
            # precomputed grids skip the encoder; caches then carry no
            # encoder state, which input_gradient tolerates but training must not
            precomputed = scene.get("feat_grids")
            for i in range(b):
                if precomputed is not None:
                    feat, ec = precomputed[i], None
                else:
                    feat, ec = encode_floor_map(p, scene["grids"][i])
                uv = map_grid_coords(scene["positions"][i], scene["origins"][i],
                                     scene["cells"][i])
                vals, lc = bilinear_lookup(feat, uv)
                feats[i] = vals
                enc_caches.append((ec, lc, feat.shape))
            ctok_in = np.concatenate([x_in, feats], axis=-1)
            scene_cache = ("floor", enc_caches)
        else:
            ctok_in = scene["tokens"]
            scene_cache = ("object", None)
        ctok, c_cin = dense(ctok_in, p["ctrl.in.W"], p["ctrl.in.b"])
        ctok = ctok + posenc
        cprefix, c_cpre = _prefix_token(p, "ctrl", t_idx, style_idx, cfg.model_width)
        c = np.concatenate([cprefix[:, None, :], ctok], axis=1)
        for l in range(cfg.layers):
            c, cc = encoder_layer(c, p, f"ctrl.l{l}", cfg.heads)
            ctrl_outs.append(c)
            ctrl_caches.append(cc)
        ctrl_cache = (c_cin, c_cpre, scene_cache)
    else:
        ctrl_cache = None

    tok, c_in = dense(x_in, p["base.in.W"], p["base.in.b"])
    tok = tok + posenc
    prefix, c_pre = _prefix_token(p, "base", t_idx, style_idx, cfg.model_width)
    h = np.concatenate([prefix[:, None, :], tok], axis=1)
    base_caches = []
    zproj_caches = []
    for l in range(cfg.layers):
        h, bc = encoder_layer(h, p, f"base.l{l}", cfg.heads)
        base_caches.append(bc)
        if use_control:
            z, zc = dense(ctrl_outs[l], p[f"zproj.l{l}.W"], p[f"zproj.l{l}.b"])
            h = h + z
            zproj_caches.append(zc)
    hf, c_lnf = layernorm(h, p["base.lnf.g"], p["base.lnf.b"])
    y, c_out = dense(hf[:, 1:, :], p["base.out.W"], p["base.out.b"])

    if not need_cache:
        return y, None
    cache = (x_in.shape, use_control, c_in, c_pre, base_caches, zproj_caches,
             c_lnf, c_out, ctrl_cache, ctrl_caches)
    return y, cache


def input_gradient(params: DenoiserParams, cache, dy: np.ndarray) -> np.ndarray:
    """Gradient of a scalar loss with respect to the model INPUT x_in.

    Used for test-time guidance through the denoiser: dy is dJ/dy on the
    prediction, the return value is dJ/dx_in (B, N, feature_width). No
    parameter gradients are formed.
    """
    cfg = params.config
    p = params.merged()
    (bshape, use_control, c_in, c_pre, base_caches, zproj_caches,
     c_lnf, c_out, ctrl_cache, ctrl_caches) = cache
    b, n, _ = bshape
    grads: dict[str, np.ndarray] = {}
    dhf = np.zeros((b, n + 1, cfg.model_width), dtype=dy.dtype)
    dhf[:, 1:, :] = dense_bwd(dy, c_out, grads, "base.out", False)
    dh = layernorm_bwd(dhf, c_lnf, grads, "base.lnf", False)
    dctrl_outs = [None] * cfg.layers
    for l in reversed(range(cfg.layers)):
        if use_control:
            dctrl_outs[l] = dense_bwd(dh, zproj_caches[l], grads, f"zproj.l{l}", False)
        dh = encoder_layer_bwd(dh, base_caches[l], grads, f"base.l{l}", False)
    dx = dense_bwd(dh[:, 1:, :], c_in, grads, "base.in", False)
    if use_control:
        c_cin, c_cpre, scene_cache = ctrl_cache
        dc = dctrl_outs[cfg.layers - 1]
        for l in reversed(range(cfg.layers)):
            dc = encoder_layer_bwd(dc, ctrl_caches[l], grads, f"ctrl.l{l}", False)
            if l > 0:
                dc = dc + dctrl_outs[l - 1]
        dtok_in = dense_bwd(dc[:, 1:, :], c_cin, grads, "ctrl.in", False)
        mode, _ = scene_cache
        if mode == "floor":
            # the control branch consumes [x_in; scene features]
            dx = dx + dtok_in[..., :cfg.feature_width]
        elif mode == "object":
            # object tokens start with the motion block of x_in
            dx[..., :cfg.pose_width] += dtok_in[..., :cfg.pose_width]
    return dx


def backward(params: DenoiserParams, cache, dy: np.ndarray,
             train_base: bool = True, train_control: bool = True) -> dict:
    """Backprop the loss gradient dy (B, N, pose_width) into parameter grads.

    With train_base=False (fine-tuning) activation gradients still flow
    through the frozen base layers, but no base weight gradients are formed.
    """
    cfg = params.config
    p = params.merged()
    (bshape, use_control, c_in, c_pre, base_caches, zproj_caches,
     c_lnf, c_out, ctrl_cache, ctrl_caches) = cache
    b, n, _ = bshape
    grads: dict[str, np.ndarray] = {}

    dhf = np.zeros((b, n + 1, cfg.model_width), dtype=F32)
    dhf[:, 1:, :] = dense_bwd(dy, c_out, grads, "base.out", train_base)
    dh = layernorm_bwd(dhf, c_lnf, grads, "base.lnf", train_base)

    dctrl_outs = [None] * cfg.layers
    for l in reversed(range(cfg.layers)):
        if use_control:
            dctrl_outs[l] = dense_bwd(dh, zproj_caches[l], grads, f"zproj.l{l}", train_control)
        dh = encoder_layer_bwd(dh, base_caches[l], grads, f"base.l{l}", train_base)

    if train_base:
        dprefix = dh[:, 0, :]
        _prefix_token_bwd(dprefix, c_pre, p, grads, "base", True)
        dense_bwd(dh[:, 1:, :], c_in, grads, "base.in", True)

    if use_control and train_control:
        c_cin, c_cpre, scene_cache = ctrl_cache
        dc = dctrl_outs[cfg.layers - 1]
        for l in reversed(range(cfg.layers)):
            dc = encoder_layer_bwd(dc, ctrl_caches[l], grads, f"ctrl.l{l}", True)
            if l > 0:
                dc = dc + dctrl_outs[l - 1]
        _prefix_token_bwd(dc[:, 0, :], c_cpre, p, grads, "ctrl", True)
        dtok_in = dense_bwd(dc[:, 1:, :], c_cin, grads, "ctrl.in", True)
        mode, enc_caches = scene_cache
        if mode == "floor":
            fw = cfg.feature_width
            dfeats = dtok_in[..., fw:]
            for i in range(b):
                ec, lc, feat_shape = enc_caches[i]
                if ec is None:
                    raise ValidationError(
                        "cannot train through precomputed feature grids")
                dgrid_feat = bilinear_lookup_bwd(dfeats[i], lc)
                encode_floor_map_bwd(dgrid_feat, ec, grads)
    return grads
