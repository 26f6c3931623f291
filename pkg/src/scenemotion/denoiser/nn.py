"""Minimal float32 neural-net primitives with hand-derived backward passes.

Every op returns (output, cache); the matching *_bwd consumes the cache and
the upstream gradient. Parameter gradients accumulate into plain dicts keyed
like the parameter dicts.
"""

from __future__ import annotations

import math

import numpy as np

F32 = np.float32

_GELU_K = F32(math.sqrt(2.0 / math.pi))
_GELU_C = F32(0.044715)
_LN_EPS = F32(1e-5)


def dense(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    y = x @ w + b
    return y, (x, w)


def dense_bwd(dy: np.ndarray, cache, grads: dict, prefix: str, train: bool = True):
    x, w = cache
    dx = dy @ w.T
    if train:
        xf = x.reshape(-1, x.shape[-1])
        dyf = dy.reshape(-1, dy.shape[-1])
        _acc(grads, prefix + ".W", xf.T @ dyf)
        _acc(grads, prefix + ".b", dyf.sum(axis=0))
    return dx


def _acc(grads: dict, key: str, val: np.ndarray):
    if key in grads:
        grads[key] += val
    else:
        grads[key] = val


def layernorm(x: np.ndarray, g: np.ndarray, b: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _LN_EPS)
    xh = xc * inv
    return g * xh + b, (xh, inv, g)


def layernorm_bwd(dy: np.ndarray, cache, grads: dict, prefix: str, train: bool = True):
    xh, inv, g = cache
    if train:
        axes = tuple(range(dy.ndim - 1))
        _acc(grads, prefix + ".g", (dy * xh).sum(axis=axes))
        _acc(grads, prefix + ".b", dy.sum(axis=axes))
    dxh = dy * g
    m1 = dxh.mean(axis=-1, keepdims=True)
    m2 = (dxh * xh).mean(axis=-1, keepdims=True)
    return inv * (dxh - m1 - xh * m2)


def gelu(x: np.ndarray):
    u = _GELU_K * (x + _GELU_C * x * x * x)
    t = np.tanh(u)
    return F32(0.5) * x * (1.0 + t), (x, t)


def gelu_bwd(dy: np.ndarray, cache):
    x, t = cache
    du = _GELU_K * (1.0 + 3.0 * _GELU_C * x * x)
    return dy * (F32(0.5) * (1.0 + t) + F32(0.5) * x * (1.0 - t * t) * du)


def softmax(z: np.ndarray):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_bwd(da: np.ndarray, a: np.ndarray):
    return a * (da - (da * a).sum(axis=-1, keepdims=True))


def _split_heads(x: np.ndarray, heads: int):
    b, t, w = x.shape
    return x.reshape(b, t, heads, w // heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray):
    b, h, t, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dk)


def attention(x: np.ndarray, p: dict, prefix: str, heads: int):
    q, cq = dense(x, p[prefix + ".q.W"], p[prefix + ".q.b"])
    k, ck = dense(x, p[prefix + ".k.W"], p[prefix + ".k.b"])
    v, cv = dense(x, p[prefix + ".v.W"], p[prefix + ".v.b"])
    qh, kh, vh = (_split_heads(a, heads) for a in (q, k, v))
    scale = F32(1.0 / math.sqrt(qh.shape[-1]))
    scores = (qh @ kh.transpose(0, 1, 3, 2)) * scale
    attn = softmax(scores)
    ctx = attn @ vh
    merged = _merge_heads(ctx)
    y, cy = dense(merged, p[prefix + ".o.W"], p[prefix + ".o.b"])
    return y, (cq, ck, cv, qh, kh, vh, attn, cy, scale, heads)


def attention_bwd(dy: np.ndarray, cache, grads: dict, prefix: str, train: bool = True):
    cq, ck, cv, qh, kh, vh, attn, cy, scale, heads = cache
    dmerged = dense_bwd(dy, cy, grads, prefix + ".o", train)
    dctx = _split_heads(dmerged, heads)
    dattn = dctx @ vh.transpose(0, 1, 3, 2)
    dvh = attn.transpose(0, 1, 3, 2) @ dctx
    dscores = softmax_bwd(dattn, attn) * scale
    dqh = dscores @ kh
    dkh = dscores.transpose(0, 1, 3, 2) @ qh
    dq, dk, dv = (_merge_heads(a) for a in (dqh, dkh, dvh))
    dx = dense_bwd(dq, cq, grads, prefix + ".q", train)
    dx += dense_bwd(dk, ck, grads, prefix + ".k", train)
    dx += dense_bwd(dv, cv, grads, prefix + ".v", train)
    return dx


def encoder_layer(x: np.ndarray, p: dict, prefix: str, heads: int):
    n1, c1 = layernorm(x, p[prefix + ".ln1.g"], p[prefix + ".ln1.b"])
    a, ca = attention(n1, p, prefix + ".attn", heads)
    h = x + a
    n2, c2 = layernorm(h, p[prefix + ".ln2.g"], p[prefix + ".ln2.b"])
    f1, cf1 = dense(n2, p[prefix + ".ffn1.W"], p[prefix + ".ffn1.b"])
    g1, cg = gelu(f1)
    f2, cf2 = dense(g1, p[prefix + ".ffn2.W"], p[prefix + ".ffn2.b"])
    return h + f2, (c1, ca, c2, cf1, cg, cf2)


def encoder_layer_bwd(dy: np.ndarray, cache, grads: dict, prefix: str, train: bool = True):
    c1, ca, c2, cf1, cg, cf2 = cache
    dg1 = dense_bwd(dy, cf2, grads, prefix + ".ffn2", train)
    df1 = gelu_bwd(dg1, cg)
    dn2 = dense_bwd(df1, cf1, grads, prefix + ".ffn1", train)
    dh = dy + layernorm_bwd(dn2, c2, grads, prefix + ".ln2", train)
    dn1 = attention_bwd(dh, ca, grads, prefix + ".attn", train)
    return dh + layernorm_bwd(dn1, c1, grads, prefix + ".ln1", train)


def sinusoid_table(length: int, width: int) -> np.ndarray:
    """Fixed sin/cos position code, (length, width) float32."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    half = width // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half, dtype=np.float64) / max(half, 1))
    args = pos * freqs[None, :]
    table = np.zeros((length, width), dtype=np.float64)
    table[:, 0::2] = np.sin(args)[:, : (width + 1) // 2]
    table[:, 1::2] = np.cos(args)[:, : width // 2]
    return table.astype(F32)


# --- small conv encoder (map features) ---------------------------------------


def conv3x3_s2(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Strided 3x3 convolution, pad 1. x: (H, W, Cin); w: (9*Cin, Cout)."""
    h, wd, cin = x.shape
    ho = (h - 1) // 2 + 1
    wo = (wd - 1) // 2 + 1
    xp = np.zeros((h + 2, wd + 2, cin), dtype=x.dtype)
    xp[1:h + 1, 1:wd + 1] = x
    cols = np.empty((ho, wo, 9 * cin), dtype=x.dtype)
    for ki in range(3):
        for kj in range(3):
            block = xp[ki:ki + 2 * (ho - 1) + 1:2, kj:kj + 2 * (wo - 1) + 1:2]
            cols[:, :, (ki * 3 + kj) * cin:(ki * 3 + kj + 1) * cin] = block
    y = cols.reshape(-1, 9 * cin) @ w + b
    return y.reshape(ho, wo, -1), (cols, w, (h, wd, cin))


def conv3x3_s2_bwd(dy: np.ndarray, cache, grads: dict, prefix: str):
    cols, w, (h, wd, cin) = cache
    ho, wo, cout = dy.shape
    dyf = dy.reshape(-1, cout)
    colsf = cols.reshape(-1, cols.shape[-1])
    _acc(grads, prefix + ".W", colsf.T @ dyf)
    _acc(grads, prefix + ".b", dyf.sum(axis=0))
    dcols = (dyf @ w.T).reshape(ho, wo, 9 * cin)
    dxp = np.zeros((h + 2, wd + 2, cin), dtype=dy.dtype)
    for ki in range(3):
        for kj in range(3):
            dxp[ki:ki + 2 * (ho - 1) + 1:2, kj:kj + 2 * (wo - 1) + 1:2] += \
                dcols[:, :, (ki * 3 + kj) * cin:(ki * 3 + kj + 1) * cin]
    return dxp[1:h + 1, 1:wd + 1]


def bilinear_lookup(grid: np.ndarray, uv: np.ndarray):
    """Sample (Hf, Wf, F) feature grid at (N, 2) grid coords, clamped to border."""
    hf, wf, _ = grid.shape
    u = np.clip(uv[:, 0], 0.0, hf - 1.0)
    v = np.clip(uv[:, 1], 0.0, wf - 1.0)
    i = np.minimum(np.floor(u).astype(np.int64), hf - 2) if hf > 1 else np.zeros(len(u), np.int64)
    j = np.minimum(np.floor(v).astype(np.int64), wf - 2) if wf > 1 else np.zeros(len(v), np.int64)
    a = (u - i).astype(grid.dtype)[:, None]
    b = (v - j).astype(grid.dtype)[:, None]
    g00 = grid[i, j]
    g10 = grid[i + 1, j]
    g01 = grid[i, j + 1]
    g11 = grid[i + 1, j + 1]
    y = (1 - a) * (1 - b) * g00 + a * (1 - b) * g10 + (1 - a) * b * g01 + a * b * g11
    return y, (i, j, a, b, grid.shape)


def bilinear_lookup_bwd(dy: np.ndarray, cache):
    i, j, a, b, shape = cache
    dgrid = np.zeros(shape, dtype=dy.dtype)
    np.add.at(dgrid, (i, j), (1 - a) * (1 - b) * dy)
    np.add.at(dgrid, (i + 1, j), a * (1 - b) * dy)
    np.add.at(dgrid, (i, j + 1), (1 - a) * b * dy)
    np.add.at(dgrid, (i + 1, j + 1), a * b * dy)
    return dgrid


class Adam:
    """Adam with bias correction; state keyed like the parameter dict."""

    def __init__(self, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, params: dict, grads: dict, keys=None):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        for k in (keys if keys is not None else grads.keys()):
            if k not in grads:
                continue
            g = grads[k]
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = b1 * self.m[k] + (1 - b1) * g
            self.v[k] = b2 * self.v[k] + (1 - b2) * (g * g)
            mhat = self.m[k] / c1
            vhat = self.v[k] / c2
            params[k] = (params[k] - self.lr * mhat / (np.sqrt(vhat) + self.eps)).astype(F32)
