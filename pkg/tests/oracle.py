"""Independent float64 references used to pin expected values in the tests.

Everything in here is deliberately naive: explicit per-pixel loops, textbook
formulas, no stabilization tricks and no imports from the package under test.
The point is that these functions are simple enough to audit by eye, so the
vectorized implementations can be checked against them.
"""
from __future__ import annotations

import math

import numpy as np


def unit_pixels(field):
    """L2-normalize the last axis, pixel by pixel; zero vectors stay zero."""
    field = np.asarray(field, dtype=np.float64)
    out = np.zeros_like(field)
    flat = field.reshape(-1, field.shape[-1])
    out_flat = out.reshape(-1, field.shape[-1])
    for i in range(flat.shape[0]):
        n = math.sqrt(float(np.dot(flat[i], flat[i])))
        if n > 0.0:
            out_flat[i] = flat[i] / n
    return out


def bilinear(src, out_h, out_w):
    """Half-pixel-center bilinear resize, one output pixel at a time."""
    src = np.asarray(src, dtype=np.float64)
    squeeze = src.ndim == 2
    if squeeze:
        src = src[:, :, None]
    h, w, chans = src.shape
    out = np.zeros((out_h, out_w, chans))
    for i in range(out_h):
        sy = (i + 0.5) * h / out_h - 0.5
        sy = min(max(sy, 0.0), h - 1.0)
        y0 = int(math.floor(sy))
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for j in range(out_w):
            sx = (j + 0.5) * w / out_w - 0.5
            sx = min(max(sx, 0.0), w - 1.0)
            x0 = int(math.floor(sx))
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            out[i, j] = (
                (1.0 - fy) * (1.0 - fx) * src[y0, x0]
                + (1.0 - fy) * fx * src[y0, x1]
                + fy * (1.0 - fx) * src[y1, x0]
                + fy * fx * src[y1, x1]
            )
    return out[:, :, 0] if squeeze else out


def aggregate(values, kind, tau_s):
    """Pool one class's synonym scores: naive lse / average / max."""
    vals = [float(v) for v in values]
    if kind == "lse":
        return math.log(sum(math.exp(v / tau_s) for v in vals))
    if kind == "average":
        return sum(vals) / len(vals)
    if kind == "max":
        return max(vals)
    raise ValueError(kind)


def log_softmax(values):
    """Naive log-softmax of a short vector (no max subtraction)."""
    denom = math.log(sum(math.exp(float(v)) for v in values))
    return [float(v) - denom for v in values]


def prob_to_logit(p, eps=1e-6):
    p = min(max(float(p), eps), 1.0 - eps)
    return math.log(p / (1.0 - p))


def pipeline(features, embeddings, offsets, mask_logits, presence, *,
             lam, tau_s, aggregation, normalize_order="both"):
    """Full reference path: normalize, resize, match, pool, calibrate, fuse.

    Returns (log_pi, scores, labels) as float64 / int64 arrays.  `offsets`
    lists (start, count) row ranges into `embeddings` per class, `mask_logits`
    fixes the output resolution, ties in the argmax go to the smallest index.
    """
    feats = np.asarray(features, dtype=np.float64)
    emb = np.asarray(embeddings, dtype=np.float64)
    masks = np.asarray(mask_logits, dtype=np.float64)
    pres = np.asarray(presence, dtype=np.float64)
    out_h, out_w, n_classes = masks.shape

    if normalize_order in ("before", "both"):
        feats = unit_pixels(feats)
    feats = bilinear(feats, out_h, out_w)
    if normalize_order in ("after", "both"):
        feats = unit_pixels(feats)

    log_pi = np.zeros((out_h, out_w, n_classes))
    scores = np.zeros((out_h, out_w, n_classes))
    labels = np.zeros((out_h, out_w), dtype=np.int64)
    for i in range(out_h):
        for j in range(out_w):
            f = feats[i, j]
            pooled = []
            for start, count in offsets:
                sims = [float(np.dot(emb[r], f)) for r in range(start, start + count)]
                pooled.append(aggregate(sims, aggregation, tau_s))
            prior = log_softmax(pooled)
            best = 0
            for c in range(n_classes):
                log_pi[i, j, c] = prior[c]
                scores[i, j, c] = masks[i, j, c] + lam * prior[c] + pres[c]
                if scores[i, j, c] > scores[i, j, best]:
                    best = c
            labels[i, j] = best
    return log_pi, scores, labels


def confusion(gt, pred, n_classes, ignore_index=None):
    """Hand-rolled confusion counts; rows are ground truth, cols prediction."""
    gt = np.asarray(gt)
    pred = np.asarray(pred)
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    for g, p in zip(gt.ravel().tolist(), pred.ravel().tolist()):
        if ignore_index is not None and (g == ignore_index or p == ignore_index):
            continue
        counts[g, p] += 1
    return counts


def iou_values(counts):
    """Per-class IoU from confusion counts; undefined classes come back None."""
    n = counts.shape[0]
    out = []
    for c in range(n):
        inter = int(counts[c, c])
        union = int(counts[c, :].sum()) + int(counts[:, c].sum()) - inter
        out.append(inter / union if union > 0 else None)
    return out


def mean_iou(counts):
    vals = [v for v in iou_values(counts) if v is not None]
    return sum(vals) / len(vals)
