"""Forward-pass numerics for graph fusion and propagation, plus the
perception loss primitives.

All operations are pure functions over numpy arrays with deterministic
(ascending-index) accumulation order. No training loop or autodiff; the
mechanisms are exercised at toy scale and checked algebraically.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

from .errors import (DimensionMismatch, LengthMismatch, NonSquareAdjacency)

_PROB_EPS = 1e-7


@dataclass
class MlpParams:
    """Stack of dense layers with ReLU between (not after) layers."""
    weights: list    # layer k: (out_k, in_k)
    biases: list     # layer k: (out_k,)

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise DimensionMismatch("weights/biases layer count mismatch")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.asarray(w, dtype=float)
            b = np.asarray(b, dtype=float)
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise DimensionMismatch(f"layer {k} shape mismatch")
            if k > 0 and w.shape[1] != self.weights[k - 1].shape[0]:
                raise DimensionMismatch(
                    f"layer {k} input dim {w.shape[1]} does not chain")
            self.weights[k] = w
            self.biases[k] = b

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Apply to rows of x: (N, in_dim) -> (N, out_dim)."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.in_dim:
            raise DimensionMismatch(
                f"input dim {x.shape[-1]} != MLP input {self.in_dim}")
        h = x
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if k > 0:
                h = np.maximum(h, 0.0)
            h = h @ w.T + b
        return h


def two_layer_mlp(w1, b1, w2, b2) -> MlpParams:
    return MlpParams(weights=[np.asarray(w1, float), np.asarray(w2, float)],
                     biases=[np.asarray(b1, float), np.asarray(b2, float)])


@dataclass
class SgnnWeights:
    """Propagation weights: w_cc (3, F_c, F_c), w_ct (C_t, F_c, F_p),
    per-element class scores s_t (C_t, K), and scalar gains alpha, beta."""
    w_cc: np.ndarray = None
    w_ct: np.ndarray = None
    s_t: np.ndarray = None
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.w_cc is not None:
            self.w_cc = np.asarray(self.w_cc, dtype=float)
            if self.w_cc.ndim != 3 or self.w_cc.shape[0] != 3 \
                    or self.w_cc.shape[1] != self.w_cc.shape[2]:
                raise DimensionMismatch(
                    f"w_cc must be (3, F_c, F_c), got {self.w_cc.shape}")
        if self.w_ct is not None:
            self.w_ct = np.asarray(self.w_ct, dtype=float)
            if self.w_ct.ndim != 3:
                raise DimensionMismatch(
                    f"w_ct must be rank 3, got {self.w_ct.shape}")
        if self.s_t is not None:
            self.s_t = np.asarray(self.s_t, dtype=float)
            if self.s_t.min() < 0.0 or self.s_t.max() > 1.0:
                raise DimensionMismatch("s_t entries must lie in [0, 1]")


def _check_adjacency(adj: np.ndarray, square: bool) -> np.ndarray:
    adj = np.asarray(adj, dtype=float)
    if adj.ndim != 2:
        raise DimensionMismatch(f"adjacency must be rank 2, got {adj.shape}")
    if square and adj.shape[0] != adj.shape[1]:
        raise NonSquareAdjacency(f"adjacency shape {adj.shape}")
    return adj


def edge_conv(node_features: np.ndarray, adjacency: np.ndarray,
              mlp: MlpParams) -> np.ndarray:
    """EdgeConv: out_i = mean over neighbors j of MLP([x_i, x_j - x_i]).

    Nodes without neighbors yield the zero vector.
    """
    x = np.asarray(node_features, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"features must be (N, F), got {x.shape}")
    n, f = x.shape
    adj = _check_adjacency(adjacency, square=True)
    if adj.shape[0] != n:
        raise DimensionMismatch("adjacency size does not match feature rows")
    if mlp.in_dim != 2 * f:
        raise DimensionMismatch(
            f"MLP input dim {mlp.in_dim} != 2F = {2 * f}")
    out = np.zeros((n, mlp.out_dim), dtype=float)
    for i in range(n):
        nbrs = np.flatnonzero(adj[i])
        if nbrs.size == 0:
            continue
        pairs = np.concatenate(
            [np.repeat(x[i][None, :], nbrs.size, axis=0),
             x[nbrs] - x[i]], axis=1)
        out[i] = mlp.apply(pairs).mean(axis=0)
    return out


def sgnn_cc_propagate(q_c: np.ndarray, a_cc: np.ndarray,
                      weights: SgnnWeights) -> np.ndarray:
    """Centerline-to-centerline propagation over the three connection modes
    {successor, predecessor, self-loop}:

        out_m = alpha * sum_c sum_n T[c, m, n] * W_cc[c] @ q_n
        T = stack(A_cc, A_cc^T, I)
    """
    q = np.asarray(q_c, dtype=float)
    if q.ndim != 2:
        raise DimensionMismatch(f"queries must be (M, F_c), got {q.shape}")
    m, f_c = q.shape
    a = _check_adjacency(a_cc, square=True)
    if a.shape[0] != m:
        raise DimensionMismatch("adjacency size does not match query rows")
    if weights.w_cc is None or weights.w_cc.shape[1] != f_c:
        raise DimensionMismatch("w_cc does not match query dim")
    t = np.stack([a, a.T, np.eye(m)])
    out = np.zeros_like(q)
    for c in range(3):
        out += t[c] @ (q @ weights.w_cc[c].T)
    return weights.alpha * out


def sgnn_ct_propagate(q_t: np.ndarray, a_ct: np.ndarray,
                      weights: SgnnWeights, f_proj: MlpParams) -> np.ndarray:
    """Traffic-to-centerline propagation:

        out_m = beta * sum_c sum_n s_t[c, n] * A_ct[m, n]
                               * W_ct[c] @ f_proj(q_t[n])

    f_proj embeds traffic queries (F_t) into the space W_ct consumes (F_p);
    the output lives in the centerline feature space (F_c).
    """
    q = np.asarray(q_t, dtype=float)
    if q.ndim != 2:
        raise DimensionMismatch(f"queries must be (K, F_t), got {q.shape}")
    k = q.shape[0]
    a = _check_adjacency(a_ct, square=False)
    if a.shape[1] != k:
        raise DimensionMismatch(
            f"A_ct columns {a.shape[1]} != traffic query count {k}")
    if weights.w_ct is None or weights.s_t is None:
        raise DimensionMismatch("w_ct and s_t are required")
    n_cls = weights.w_ct.shape[0]
    if weights.s_t.shape != (n_cls, k):
        raise DimensionMismatch(
            f"s_t shape {weights.s_t.shape} != ({n_cls}, {k})")
    proj = f_proj.apply(q)                      # (K, F_p)
    if weights.w_ct.shape[2] != proj.shape[1]:
        raise DimensionMismatch(
            f"w_ct inner dim {weights.w_ct.shape[2]} != f_proj output "
            f"{proj.shape[1]}")
    m = a.shape[0]
    f_c = weights.w_ct.shape[1]
    out = np.zeros((m, f_c), dtype=float)
    for c in range(n_cls):
        weighted = a * weights.s_t[c][None, :]          # (M, K)
        out += weighted @ (proj @ weights.w_ct[c].T)    # (M, F_c)
    return weights.beta * out


def focal_loss(pred_prob: float, target: int, gamma: float = 2.0,
               alpha_bal: float = 0.25) -> float:
    """Focal loss -alpha * (1 - p_t)^gamma * log(p_t), p clamped at 1e-7.

    With gamma=0 and alpha_bal=1 this reduces exactly to cross-entropy.
    """
    p = min(max(float(pred_prob), _PROB_EPS), 1.0 - _PROB_EPS)
    p_t = p if target == 1 else 1.0 - p
    return -alpha_bal * (1.0 - p_t) ** gamma * math.log(p_t)


def _as_polyline(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise LengthMismatch(f"bad polyline shape {pts.shape}")
    return pts


def p2p_loss(pred, gt) -> float:
    """Total Manhattan distance over corresponding points, taking the
    orientation (forward or reversed ground truth) that minimizes it."""
    a = _as_polyline(pred)
    b = _as_polyline(gt)
    if a.shape != b.shape:
        raise LengthMismatch(f"waypoint counts differ: {a.shape} vs {b.shape}")
    fwd = np.abs(a - b).sum()
    rev = np.abs(a - b[::-1]).sum()
    return float(min(fwd, rev))


def dir_loss(pred, gt, direction: str = None) -> float:
    """Sum of cosine similarities between corresponding edge vectors.

    `direction` picks the gt orientation ("forward"/"reversed"); when None
    the orientation minimizing p2p_loss is used. Zero-length edges on either
    side are skipped.
    """
    a = _as_polyline(pred)
    b = _as_polyline(gt)
    if a.shape != b.shape or a.shape[0] < 2:
        raise LengthMismatch("polylines must have equal counts >= 2")
    if direction is None:
        fwd = np.abs(a - b).sum()
        rev = np.abs(a - b[::-1]).sum()
        direction = "forward" if fwd <= rev else "reversed"
    if direction == "reversed":
        b = b[::-1]
    ea = np.diff(a, axis=0)
    eb = np.diff(b, axis=0)
    na = np.linalg.norm(ea, axis=1)
    nb = np.linalg.norm(eb, axis=1)
    valid = (na > 0) & (nb > 0)
    if not valid.all():
        logger.warning("dir_loss: skipped %d degenerate edge pair(s)",
                       int((~valid).sum()))
    sims = (ea[valid] * eb[valid]).sum(axis=1) / (na[valid] * nb[valid])
    return float(sims.sum())
