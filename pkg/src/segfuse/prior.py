"""Similarity maps, synonym aggregation and the cross-class log prior.

The per-pixel pipeline is: unit-normalize dense features, resize them to the
evidence resolution, dot them against every synonym embedding, pool each
class's synonym scores, then log-softmax across classes.  All arithmetic runs
in float64 and is rounded to float32 once, at the grid boundary; log-domain
reductions use max subtraction so large-magnitude inputs stay finite.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embeddings import EmbeddingStore
from .errors import SegfuseError, ShapeError
from .grid import DenseGrid, resize_bilinear_array
from .prompts import PromptBank, chunk_synonyms

logger = logging.getLogger(__name__)

DEFAULT_TAU = 0.10
DEFAULT_CHUNK = 16

AGGREGATION_KINDS = ("lse", "average", "max")
NORMALIZE_ORDERS = ("before", "after", "both")


@dataclass(frozen=True)
class Aggregation:
    """Synonym pooling rule; only the lse variant carries a temperature."""

    kind: str
    tau_s: float = DEFAULT_TAU

    def __post_init__(self):
        if self.kind not in AGGREGATION_KINDS:
            raise ValueError(f"aggregation kind must be one of {AGGREGATION_KINDS}")
        if self.kind == "lse" and not self.tau_s > 0.0:
            raise ValueError(f"lse temperature must be > 0, got {self.tau_s}")

    @classmethod
    def lse(cls, tau_s: float = DEFAULT_TAU) -> "Aggregation":
        return cls("lse", tau_s)

    @classmethod
    def average(cls) -> "Aggregation":
        return cls("average")

    @classmethod
    def maximum(cls) -> "Aggregation":
        return cls("max")


@dataclass
class PriorStack:
    """Cross-class log prior plus the pooled scores it was built from."""

    log_pi: DenseGrid        # H x W x C
    aggregated_u: DenseGrid  # H x W x C
    zero_norm_pixels: int = 0


def normalize_pixels_array(feats: np.ndarray) -> tuple[np.ndarray, int]:
    """Unit-normalize each pixel vector in float64.

    Zero-norm pixels map to the zero vector (similarity 0 to everything) and
    are counted rather than rejected; padded regions produce them routinely.
    """
    feats = np.asarray(feats, dtype=np.float64)
    norms = np.sqrt((feats * feats).sum(axis=-1))
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return feats / safe[..., None], int(zero.sum())


def similarity_array(feats: np.ndarray, embedding: np.ndarray) -> np.ndarray:
    """Per-pixel dot product of an (H, W, D) field against one D-vector."""
    return np.einsum("hwd,d->hw", feats, embedding)


def aggregate_array(u: np.ndarray, mode: Aggregation) -> np.ndarray:
    """Pool synonym scores along the last axis.

    lse computes log sum_j exp(u_j / tau_s) with max subtraction; average and
    max operate on the raw scores.  Reduction order is the synonym file order.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape[-1] == 0:
        raise SegfuseError("empty_synonym_set", "cannot aggregate zero synonyms")
    if mode.kind == "average":
        return u.mean(axis=-1)
    if mode.kind == "max":
        return u.max(axis=-1)
    scaled = u / mode.tau_s
    peak = scaled.max(axis=-1, keepdims=True)
    return peak[..., 0] + np.log(np.exp(scaled - peak).sum(axis=-1))


def log_prior_array(u: np.ndarray) -> np.ndarray:
    """Log-softmax over the last (class) axis, never materializing the softmax."""
    u = np.asarray(u, dtype=np.float64)
    peak = u.max(axis=-1, keepdims=True)
    lse = peak + np.log(np.exp(u - peak).sum(axis=-1, keepdims=True))
    return u - lse


def similarity_map(features: DenseGrid, embedding: np.ndarray) -> DenseGrid:
    """Similarity of unit-normalized features against one unit embedding.

    Returns an H x W x 1 grid of cosine scores in [-1, 1].  Features are
    expected already normalized (see `normalize_pixels_array`).
    """
    embedding = np.asarray(embedding, dtype=np.float64).ravel()
    if features.data.ndim != 3:
        raise ShapeError("features need 3 axes (H, W, D)", code="dim_mismatch")
    if features.channels != embedding.shape[0]:
        raise ShapeError(
            f"feature dim {features.channels} != embedding dim {embedding.shape[0]}",
            code="dim_mismatch")
    sim = similarity_array(features.data.astype(np.float64), embedding)
    return DenseGrid(sim.astype(np.float32)[:, :, None])


def aggregate_class(sim_stack: Sequence[DenseGrid], mode: Aggregation) -> DenseGrid:
    """Pool one class's synonym similarity grids into a single H x W x 1 grid."""
    if len(sim_stack) == 0:
        raise SegfuseError("empty_synonym_set", "cannot aggregate zero synonyms")
    shapes = {(g.height, g.width) for g in sim_stack}
    if len(shapes) != 1:
        raise ShapeError(f"synonym grids disagree on dims: {sorted(shapes)}")
    u = np.stack([g.data.reshape(g.height, g.width).astype(np.float64)
                  for g in sim_stack], axis=-1)
    return DenseGrid(aggregate_array(u, mode).astype(np.float32)[:, :, None])


def log_prior(aggregated: DenseGrid) -> PriorStack:
    """Cross-class normalization of pooled scores into a log-prior stack."""
    if aggregated.data.ndim != 3:
        raise ShapeError("aggregated scores need 3 axes (H, W, C)")
    log_pi = log_prior_array(aggregated.data.astype(np.float64))
    return PriorStack(DenseGrid(log_pi.astype(np.float32)), aggregated)


def build_prior(features: DenseGrid, store: EmbeddingStore, bank: PromptBank,
                mode: Aggregation, out_h: int, out_w: int, *,
                chunk: int = DEFAULT_CHUNK,
                normalize_order: str = "both") -> PriorStack:
    """Full semantic-prior pipeline for one image.

    Features are unit-normalized, bilinearly resized to out_h x out_w (the
    structural evidence resolution), matched against every synonym embedding
    in batches of `chunk`, pooled per class with `mode`, and cross-class
    normalized.  `normalize_order` picks whether pixel normalization happens
    before the resize, after it, or both (interpolated vectors shrink below
    unit norm, so the default re-normalizes).
    """
    if normalize_order not in NORMALIZE_ORDERS:
        raise ValueError(f"normalize_order must be one of {NORMALIZE_ORDERS}")
    if features.data.ndim != 3:
        raise ShapeError("features need 3 axes (H, W, D)", code="dim_mismatch")
    if features.channels != store.dim:
        raise ShapeError(
            f"feature dim {features.channels} != embedding dim {store.dim}",
            code="dim_mismatch")
    if store.num_classes != bank.num_classes:
        raise ShapeError(
            f"store has {store.num_classes} classes, bank has {bank.num_classes}")

    feats = features.data.astype(np.float64)
    zero_pixels = 0
    if normalize_order in ("before", "both"):
        feats, n = normalize_pixels_array(feats)
        zero_pixels += n
    feats = resize_bilinear_array(feats, out_h, out_w)
    if normalize_order in ("after", "both"):
        feats, n = normalize_pixels_array(feats)
        zero_pixels += n
    if zero_pixels:
        logger.warning("%d zero-norm feature pixels mapped to the zero vector",
                       zero_pixels)

    vectors = store.vectors.astype(np.float64)
    flat_rows = {pair: store.offsets[pair[0]][0] + pair[1]
                 for pair in bank.flat_pairs()}
    sims = np.empty((out_h, out_w, store.num_vectors), dtype=np.float64)
    for batch in chunk_synonyms(bank, chunk):
        rows = np.array([flat_rows[pair] for pair in batch], dtype=np.int64)
        sims[:, :, rows] = np.einsum("hwd,nd->hwn", feats, vectors[rows])

    pooled = np.empty((out_h, out_w, store.num_classes), dtype=np.float64)
    for ci, (start, count) in enumerate(store.offsets):
        pooled[:, :, ci] = aggregate_array(sims[:, :, start:start + count], mode)

    log_pi = log_prior_array(pooled)
    return PriorStack(DenseGrid(log_pi.astype(np.float32)),
                      DenseGrid(pooled.astype(np.float32)),
                      zero_norm_pixels=zero_pixels)
