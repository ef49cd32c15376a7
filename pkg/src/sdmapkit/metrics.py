"""Evaluation suite: Chamfer/Fréchet distances, detection AP, topology
scores, and the aggregate OLS.

Matching for AP follows standard detection-benchmark practice: predictions
are processed in descending score order, each ground truth is matched at
most once, and AP is the area under the exact precision-recall staircase
(all-point interpolation).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import EmptySet, LengthMismatch, OutOfRange

CHAMFER_THRESHOLDS = (0.5, 1.0, 1.5)
FRECHET_THRESHOLDS = (1.0, 2.0, 3.0)
IOU_THRESHOLD = 0.75
EDGE_CONFIDENCE_THRESHOLD = 0.5
RELAX_FACTOR = 1.5
RELAX_CUTOFF = 35.0


# ---------------------------------------------------------------------------
# domain types

@dataclass
class Centerline:
    points: np.ndarray           # (N, 2) or (N, 3), meters
    score: Optional[float] = None
    label: Optional[str] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] < 2:
            raise LengthMismatch(
                f"centerline needs >= 2 waypoints, got {self.points.shape}")
        if not np.isfinite(self.points).all():
            raise LengthMismatch("non-finite waypoint")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise OutOfRange(f"score {self.score} outside [0, 1]")


@dataclass
class TrafficElement:
    box: tuple                   # (x, y, w, h) pixels
    cls: str = ""
    score: Optional[float] = None

    def __post_init__(self):
        x, y, w, h = self.box
        if w <= 0 or h <= 0:
            raise OutOfRange(f"non-positive box dimensions {self.box}")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise OutOfRange(f"score {self.score} outside [0, 1]")


@dataclass
class SceneAnnotation:
    centerlines: list = field(default_factory=list)
    traffic_elements: list = field(default_factory=list)
    a_cc: Optional[np.ndarray] = None    # (M, M) confidences in [0, 1]
    a_ct: Optional[np.ndarray] = None    # (M, K)

    def __post_init__(self):
        m = len(self.centerlines)
        k = len(self.traffic_elements)
        if self.a_cc is not None:
            self.a_cc = np.asarray(self.a_cc, dtype=float)
            if self.a_cc.shape != (m, m):
                raise LengthMismatch(
                    f"a_cc shape {self.a_cc.shape} != ({m}, {m})")
        if self.a_ct is not None:
            self.a_ct = np.asarray(self.a_ct, dtype=float)
            if self.a_ct.shape != (m, k):
                raise LengthMismatch(
                    f"a_ct shape {self.a_ct.shape} != ({m}, {k})")


@dataclass
class MetricReport:
    task: str
    chamfer_ap: dict = field(default_factory=dict)   # threshold -> AP
    chamfer_map: Optional[float] = None
    det_l: Optional[float] = None
    det_t: Optional[float] = None
    top_ll: Optional[float] = None
    top_lt: Optional[float] = None
    ols: Optional[float] = None
    ols_variant: Optional[str] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"task": self.task}
        if self.task == "perception":
            out["chamfer_ap"] = {str(t): v for t, v in self.chamfer_ap.items()}
            out["chamfer_map"] = self.chamfer_map
        else:
            out.update(det_l=self.det_l, det_t=self.det_t,
                       top_ll=self.top_ll, top_lt=self.top_lt,
                       ols=self.ols, ols_variant=self.ols_variant)
        out["diagnostics"] = self.diagnostics
        return out


# ---------------------------------------------------------------------------
# distances

def chamfer(a, b) -> float:
    """Bidirectional Chamfer distance between two point sets."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptySet("chamfer distance of an empty point set")
    d = cdist(a, b)
    return 0.5 * (d.min(axis=1).mean() + d.min(axis=0).mean())


def frechet(a, b) -> float:
    """Discrete Fréchet distance via the standard dynamic program."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        raise EmptySet("Fréchet distance of an empty curve")
    d = cdist(a, b)
    ca = np.empty((n, m))
    ca[0, 0] = d[0, 0]
    for j in range(1, m):
        ca[0, j] = max(ca[0, j - 1], d[0, j])
    for i in range(1, n):
        ca[i, 0] = max(ca[i - 1, 0], d[i, 0])
        for j in range(1, m):
            ca[i, j] = max(min(ca[i - 1, j], ca[i, j - 1], ca[i - 1, j - 1]),
                           d[i, j])
    return float(ca[n - 1, m - 1])


def frechet_permuted(a, b) -> float:
    """Fréchet distance forgiving curve direction: min over b's orientations."""
    b = np.atleast_2d(np.asarray(b, dtype=float))
    return min(frechet(a, b), frechet(a, b[::-1]))


def box_iou(box_a, box_b) -> float:
    """IoU of two (x, y, w, h) boxes."""
    ax, ay, aw, ah = box_a
    bx, by, bw, bh = box_b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


# ---------------------------------------------------------------------------
# average precision

def _score_of(item) -> float:
    return 1.0 if item.score is None else item.score


def greedy_match(preds: Sequence, gts: Sequence, distance_fn,
                 threshold_fn) -> list:
    """Score-descending greedy matching.

    Returns, for each prediction (original order), the matched gt index or
    None. distance_fn(pred, gt) is minimized; a match requires
    distance <= threshold_fn(gt).
    """
    order = sorted(range(len(preds)), key=lambda i: -_score_of(preds[i]))
    taken = set()
    matched = [None] * len(preds)
    for i in order:
        best_j, best_d = None, math.inf
        for j, gt in enumerate(gts):
            if j in taken:
                continue
            d = distance_fn(preds[i], gt)
            if d < best_d and d <= threshold_fn(gt):
                best_j, best_d = j, d
        if best_j is not None:
            taken.add(best_j)
            matched[i] = best_j
    return matched


def average_precision(scored_tp: Sequence[tuple], n_gt: int) -> float:
    """AP from pooled (score, is_tp) pairs: exact PR staircase area.

    Conventions: no ground truth and no predictions -> 1.0; no ground truth
    but predictions present -> 0.0; predictions absent -> 0.0.
    """
    if n_gt == 0:
        return 1.0 if len(scored_tp) == 0 else 0.0
    if len(scored_tp) == 0:
        return 0.0
    order = sorted(range(len(scored_tp)), key=lambda i: -scored_tp[i][0])
    tp = np.array([1.0 if scored_tp[i][1] else 0.0 for i in order])
    cum_tp = np.cumsum(tp)
    ranks = np.arange(1, len(tp) + 1)
    precision = cum_tp / ranks
    recall = cum_tp / n_gt
    # right-to-left precision envelope, then sum over recall steps
    mrec = np.concatenate([[0.0], recall, [recall[-1]]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.flatnonzero(np.diff(mrec) > 0)
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def _pooled_ap(scene_pairs, distance_fn, threshold_fn) -> float:
    """AP with per-scene matching and a pooled PR curve."""
    pool = []
    n_gt = 0
    for preds, gts in scene_pairs:
        matched = greedy_match(preds, gts, distance_fn, threshold_fn)
        pool.extend((_score_of(p), matched[i] is not None)
                    for i, p in enumerate(preds))
        n_gt += len(gts)
    return average_precision(pool, n_gt)


def chamfer_ap(preds, gts, thresholds=CHAMFER_THRESHOLDS) -> dict:
    """Per-threshold Chamfer-matched AP and their mean, for one scene."""
    return chamfer_ap_scenes([(preds, gts)], thresholds)


def chamfer_ap_scenes(scene_pairs, thresholds=CHAMFER_THRESHOLDS) -> dict:
    result = {}
    pairs = list(scene_pairs)
    for t in thresholds:
        result[t] = _pooled_ap(
            pairs,
            lambda p, g: chamfer(p.points, g.points),
            lambda g: t)
    result["map"] = sum(result[t] for t in thresholds) / len(thresholds)
    return result


def _gt_relaxation(gt: Centerline, factor: float, cutoff: float) -> float:
    """Threshold multiplier for far-range ground truth centerlines."""
    nearest = np.linalg.norm(gt.points[:, :2], axis=1).min()
    return factor if nearest > cutoff else 1.0


def det_l(preds, gts, thresholds=FRECHET_THRESHOLDS,
          relax_factor=RELAX_FACTOR, relax_cutoff=RELAX_CUTOFF) -> float:
    """Centerline detection mAP under permuted Fréchet matching."""
    return det_l_scenes([(preds, gts)], thresholds, relax_factor,
                        relax_cutoff)


def det_l_scenes(scene_pairs, thresholds=FRECHET_THRESHOLDS,
                 relax_factor=RELAX_FACTOR,
                 relax_cutoff=RELAX_CUTOFF) -> float:
    pairs = list(scene_pairs)
    aps = []
    for t in thresholds:
        aps.append(_pooled_ap(
            pairs,
            lambda p, g: frechet_permuted(p.points, g.points),
            lambda g: t * _gt_relaxation(g, relax_factor, relax_cutoff)))
    return sum(aps) / len(aps)


def det_t(preds, gts, iou_threshold=IOU_THRESHOLD) -> float:
    """Traffic element mAP: per-class AP with IoU matching, averaged over
    the classes present in ground truth."""
    return det_t_scenes([(preds, gts)], iou_threshold)


def det_t_scenes(scene_pairs, iou_threshold=IOU_THRESHOLD) -> float:
    pairs = list(scene_pairs)
    classes = sorted({g.cls for _, gts in pairs for g in gts})
    if not classes:
        return 1.0 if all(len(p) == 0 for p, _ in pairs) else 0.0
    aps = []
    for cls in classes:
        cls_pairs = [([p for p in preds if p.cls == cls],
                      [g for g in gts if g.cls == cls])
                     for preds, gts in pairs]
        aps.append(_pooled_ap(
            cls_pairs,
            lambda p, g: 1.0 - box_iou(p.box, g.box),
            lambda g: 1.0 - iou_threshold))
    return sum(aps) / len(aps)


# ---------------------------------------------------------------------------
# topology

def hungarian_match(cost) -> list:
    """Minimum-total-cost one-to-one assignment on a (possibly rectangular)
    cost matrix; returns (row, col) pairs sorted by row."""
    cost = np.asarray(cost, dtype=float)
    rows, cols = linear_sum_assignment(cost)
    return sorted(zip(rows.tolist(), cols.tolist()))


def _project_vertices(preds, gts, distance_fn, threshold) -> list:
    """Assign predictions to gt vertices (Hungarian, distance-capped).

    Returns, for each gt index, the assigned pred index or None (dummy).
    """
    proj = [None] * len(gts)
    if not preds or not gts:
        return proj
    big = 1e9
    cost = np.empty((len(gts), len(preds)))
    for i, g in enumerate(gts):
        for j, p in enumerate(preds):
            d = distance_fn(p, g)
            cost[i, j] = d if d <= threshold else big
    for i, j in hungarian_match(cost):
        if cost[i, j] < big:
            proj[i] = j
    return proj


def _ranked_precision(items, matched_flags) -> list:
    """Detection-ranking precision per item: cumulative TP / rank in
    descending-score order."""
    order = sorted(range(len(items)), key=lambda i: -_score_of(items[i]))
    prec = [0.0] * len(items)
    tp = 0
    for rank, i in enumerate(order, start=1):
        if matched_flags[i]:
            tp += 1
        prec[i] = tp / rank
    return prec


def top_score(pred: SceneAnnotation, gt: SceneAnnotation, mode: str,
              frechet_threshold: float = FRECHET_THRESHOLDS[-1],
              iou_threshold: float = IOU_THRESHOLD,
              edge_threshold: float = EDGE_CONFIDENCE_THRESHOLD) -> float:
    """Topology score for one scene (mode "ll" or "lt")."""
    num, cnt = top_score_terms(pred, gt, mode, frechet_threshold,
                               iou_threshold, edge_threshold)
    return num / cnt if cnt > 0 else 1.0


def top_score_terms(pred: SceneAnnotation, gt: SceneAnnotation, mode: str,
                    frechet_threshold: float = FRECHET_THRESHOLDS[-1],
                    iou_threshold: float = IOU_THRESHOLD,
                    edge_threshold: float = EDGE_CONFIDENCE_THRESHOLD):
    """Numerator sum and counted-vertex count for the topology score.

    Projection: predicted centerlines are assigned to gt centerlines by
    permuted Fréchet distance (and, for "lt", predicted traffic elements to
    gt elements by IoU); unmatched gt vertices get dummy placeholders with
    no incident predicted edges. Edges are inferred where adjacency
    confidence exceeds `edge_threshold`. Vertices with empty gt
    neighborhoods are skipped.
    """
    if mode not in ("ll", "lt"):
        raise ValueError(f"unknown TOP mode {mode!r}")
    cl_proj = _project_vertices(
        pred.centerlines, gt.centerlines,
        lambda p, g: frechet_permuted(p.points, g.points),
        frechet_threshold)
    cl_matched = {x for x in cl_proj if x is not None}
    cl_prec = _ranked_precision(
        pred.centerlines,
        [j in cl_matched for j in range(len(pred.centerlines))])

    m = len(gt.centerlines)
    if mode == "ll":
        gt_adj = gt.a_cc if gt.a_cc is not None else np.zeros((m, m))
        pred_adj = (pred.a_cc if pred.a_cc is not None
                    else np.zeros((len(pred.centerlines),) * 2))
        nb_proj = cl_proj
        nb_prec = cl_prec
    else:
        k = len(gt.traffic_elements)
        gt_adj = gt.a_ct if gt.a_ct is not None else np.zeros((m, k))
        pred_adj = (pred.a_ct if pred.a_ct is not None
                    else np.zeros((len(pred.centerlines),
                                   len(pred.traffic_elements))))
        nb_proj = _project_vertices(
            pred.traffic_elements, gt.traffic_elements,
            lambda p, g: 1.0 - box_iou(p.box, g.box),
            1.0 - iou_threshold)
        nb_matched = {x for x in nb_proj if x is not None}
        nb_prec = _ranked_precision(
            pred.traffic_elements,
            [j in nb_matched for j in range(len(pred.traffic_elements))])

    numerator = 0.0
    counted = 0
    for v in range(m):
        gt_nbrs = set(np.flatnonzero(gt_adj[v] > edge_threshold).tolist())
        if not gt_nbrs:
            continue
        counted += 1
        pv = cl_proj[v]
        if pv is None:
            continue
        term = 0.0
        for u in range(gt_adj.shape[1]):
            pu = nb_proj[u]
            if pu is None:
                continue
            if pred_adj[pv, pu] > edge_threshold:
                # u is a projected predicted neighbor of v
                if u in gt_nbrs:
                    term += nb_prec[pu]
        numerator += term / len(gt_nbrs)
    return numerator, counted


def ols(det_l_score: float, det_t_score: float, top_ll_score: float,
        top_lt_score: float, variant: str = "sqrt") -> float:
    """Overall lane-graph score: the average of the four component scores.

    variant "sqrt" (default) applies a square root to the topology
    components before averaging; variant "mean" is the plain arithmetic
    mean of all four.
    """
    scores = (det_l_score, det_t_score, top_ll_score, top_lt_score)
    for s in scores:
        if not 0.0 <= s <= 1.0:
            raise OutOfRange(f"score {s} outside [0, 1]")
    if variant == "sqrt":
        parts = (det_l_score, det_t_score,
                 math.sqrt(top_ll_score), math.sqrt(top_lt_score))
    elif variant == "mean":
        parts = scores
    else:
        raise ValueError(f"unknown OLS variant {variant!r}")
    return sum(parts) / 4.0


# ---------------------------------------------------------------------------
# report aggregation

def evaluate_scenes(pred_scenes, gt_scenes, task: str = "reasoning",
                    ols_variant: str = "sqrt",
                    threads: int = 1) -> MetricReport:
    """Evaluate paired prediction/ground-truth scenes into a MetricReport.

    Matching is per scene; PR curves and topology terms are pooled across
    scenes. Scene work may run on `threads` workers with a deterministic
    ordered reduction.
    """
    preds = list(pred_scenes)
    gts = list(gt_scenes)
    if len(preds) != len(gts):
        raise LengthMismatch(
            f"{len(preds)} prediction scenes vs {len(gts)} gt scenes")
    diagnostics = {
        "num_scenes": len(preds),
        "num_pred_centerlines": sum(len(p.centerlines) for p in preds),
        "num_gt_centerlines": sum(len(g.centerlines) for g in gts),
    }
    cl_pairs = [(p.centerlines, g.centerlines) for p, g in zip(preds, gts)]

    if task == "perception":
        ap = chamfer_ap_scenes(cl_pairs)
        return MetricReport(
            task=task,
            chamfer_ap={t: ap[t] for t in CHAMFER_THRESHOLDS},
            chamfer_map=ap["map"],
            diagnostics=diagnostics)

    if task != "reasoning":
        raise ValueError(f"unknown task {task!r}")

    te_pairs = [(p.traffic_elements, g.traffic_elements)
                for p, g in zip(preds, gts)]
    d_l = det_l_scenes(cl_pairs)
    d_t = det_t_scenes(te_pairs)

    def scene_terms(pair):
        p, g = pair
        return (top_score_terms(p, g, "ll"), top_score_terms(p, g, "lt"))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            terms = list(pool.map(scene_terms, zip(preds, gts)))
    else:
        terms = [scene_terms(pair) for pair in zip(preds, gts)]

    ll_num = sum(t[0][0] for t in terms)
    ll_cnt = sum(t[0][1] for t in terms)
    lt_num = sum(t[1][0] for t in terms)
    lt_cnt = sum(t[1][1] for t in terms)
    t_ll = ll_num / ll_cnt if ll_cnt > 0 else 1.0
    t_lt = lt_num / lt_cnt if lt_cnt > 0 else 1.0
    return MetricReport(
        task=task, det_l=d_l, det_t=d_t, top_ll=t_ll, top_lt=t_lt,
        ols=ols(d_l, d_t, t_ll, t_lt, ols_variant),
        ols_variant=ols_variant, diagnostics=diagnostics)
