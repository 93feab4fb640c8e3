"""Segment feature pooling and K-means lexicon clustering.

The K-means here trades speed for reproducibility: k-means++ seeding from a
single Generator, Lloyd iterations whose assignment step is computed in
fixed-size chunks, and partial sums reduced in chunk order.  Chunks may be
farmed out to a thread pool, but because the reduction order is fixed the
centroids are bit-identical for any thread count.  Empty clusters are
refilled with the point currently farthest from its centroid.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .segmenter import AttentionSegment
from .tensorio import read_tensor, write_tensor

POOLINGS = ("mean", "max")

_CHUNK = 8192  # fixed chunk size; must not depend on thread count


@dataclass(frozen=True)
class PooledSegment:
    """One attention segment's pooled feature vector."""

    utterance_id: str
    segment: AttentionSegment
    vector: np.ndarray
    pooling: str


@dataclass(frozen=True)
class ClusterModel:
    """Fitted lexicon: K centroids plus fit diagnostics.

    ``normalize`` records the vector preprocessing baked into the model
    ("none" or "l2"); kmeans_assign re-applies it, so cosine-style models
    score new vectors consistently.
    """

    centroids: np.ndarray  # (K, dim) float64
    k: int
    seed: int
    inertia: float
    n_iter: int
    inertia_trace: tuple[float, ...] = ()
    normalize: str = "none"

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def _preprocess(x: np.ndarray, normalize: str) -> np.ndarray:
    if normalize == "none":
        return x
    if normalize == "l2":  # squared euclidean on unit vectors ~ cosine distance
        norms = np.sqrt((x**2).sum(axis=1, keepdims=True))
        return x / np.maximum(norms, 1e-12)
    raise DataError(f"normalize must be 'none' or 'l2', got {normalize!r}")


def pool_segment_features(
    features: np.ndarray,
    segments: Sequence[AttentionSegment],
    layer: int,
    layers: Sequence[int],
    pooling: str = "mean",
    utterance_id: str = "",
) -> list[PooledSegment]:
    """Pool per-frame features over each segment's frames.

    ``features`` is the [layer, frame, dim] tensor from the manifest (CLS
    position never included); ``layer`` selects which exported layer to pool,
    resolved through the manifest's ``layers`` list.
    """
    if pooling not in POOLINGS:
        raise DataError(f"pooling must be one of {POOLINGS}, got {pooling!r}")
    feats = np.asarray(features)
    if feats.ndim != 3:
        raise DataError(f"features must be [layer, frame, dim], got shape {feats.shape}")
    try:
        li = list(layers).index(layer)
    except ValueError:
        raise DataError(f"feature layer {layer} not among exported layers {list(layers)}") from None
    frames = feats.shape[1]
    out = []
    for seg in segments:
        if seg.start_frame < 0 or seg.end_frame > frames:
            raise DataError(
                f"{utterance_id}: segment [{seg.start_frame},{seg.end_frame}) outside "
                f"feature range of {frames} frames"
            )
        window = feats[li, seg.start_frame : seg.end_frame]
        vector = window.mean(axis=0) if pooling == "mean" else window.max(axis=0)
        if not np.all(np.isfinite(vector)):
            raise DataError(f"{utterance_id}: non-finite pooled vector for segment {seg}")
        out.append(PooledSegment(utterance_id, seg, vector.astype(np.float32), pooling))
    return out


def _kmeanspp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++: sample a few candidates per step, keep the one that
    minimizes the resulting potential.  Deterministic given the generator."""
    n = x.shape[0]
    n_trials = 2 + int(np.log2(k)) if k > 1 else 1
    centroids = np.empty((k, x.shape[1]), dtype=np.float64)
    centroids[0] = x[int(rng.integers(n))]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            candidates = rng.choice(n, size=n_trials, p=d2 / total)
        else:
            candidates = rng.integers(n, size=1)  # duplicates everywhere
        best_idx, best_d2, best_potential = -1, None, np.inf
        for idx in candidates:
            cand_d2 = np.minimum(d2, ((x - x[int(idx)]) ** 2).sum(axis=1))
            potential = cand_d2.sum()
            if potential < best_potential:
                best_idx, best_d2, best_potential = int(idx), cand_d2, potential
        centroids[i] = x[best_idx]
        d2 = best_d2
    return centroids


def _chunk_bounds(n: int) -> list[tuple[int, int]]:
    return [(s, min(s + _CHUNK, n)) for s in range(0, max(n, 1), _CHUNK)]


def _assign_chunk(x, x_norm, centroids, c_norm):
    d = x @ centroids.T
    d *= -2.0
    d += c_norm
    labels = np.argmin(d, axis=1)  # ties resolve to the lowest centroid index
    dists = d[np.arange(x.shape[0]), labels] + x_norm
    return labels, np.maximum(dists, 0.0)


def _assign_all(x, x_norm, centroids, pool):
    c_norm = (centroids**2).sum(axis=1)
    bounds = _chunk_bounds(x.shape[0])
    work = [(x[s:e], x_norm[s:e], centroids, c_norm) for s, e in bounds]
    if pool is None:
        results = [_assign_chunk(*args) for args in work]
    else:
        results = list(pool.map(lambda args: _assign_chunk(*args), work))
    labels = np.concatenate([r[0] for r in results])
    dists = np.concatenate([r[1] for r in results])
    return labels, dists


def _accumulate(x, labels, k, pool):
    """Per-cluster sums and counts, reduced in fixed chunk order."""

    def one(args):
        xc, lc = args
        sums = np.zeros((k, x.shape[1]), dtype=np.float64)
        np.add.at(sums, lc, xc)
        counts = np.bincount(lc, minlength=k)
        return sums, counts

    bounds = _chunk_bounds(x.shape[0])
    work = [(x[s:e], labels[s:e]) for s, e in bounds]
    results = [one(args) for args in work] if pool is None else list(pool.map(one, work))
    sums = np.zeros((k, x.shape[1]), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    for chunk_sums, chunk_counts in results:  # fixed order: bit-reproducible
        sums += chunk_sums
        counts += chunk_counts
    return sums, counts


def kmeans_fit(
    vectors: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-4,
    n_threads: int = 1,
    normalize: str = "none",
) -> ClusterModel:
    """Fit K centroids with seeded k-means++ and Lloyd iterations.

    Deterministic given (vector order, seed): the same inputs produce
    bit-identical centroids for any ``n_threads``.  Stops when the relative
    centroid shift drops below ``tol`` or after ``max_iter`` iterations.
    ``normalize="l2"`` length-normalizes vectors first (cosine-style
    clustering); default is squared Euclidean on the raw vectors.
    """
    x = np.ascontiguousarray(np.asarray(vectors, dtype=np.float64))
    if x.ndim != 2:
        raise DataError(f"vectors must be 2-D (n, dim), got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite input vector passed to kmeans_fit")
    x = _preprocess(x, normalize)
    n = x.shape[0]
    if k < 1:
        raise DataError(f"k must be >= 1, got {k}")
    if k > n:
        raise DataError(f"k={k} exceeds the number of vectors ({n})")

    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_init(x, k, rng)
    x_norm = (x**2).sum(axis=1)

    pool = ThreadPoolExecutor(max_workers=n_threads) if n_threads > 1 else None
    try:
        labels, dists = _assign_all(x, x_norm, centroids, pool)
        inertia = float(dists.sum())
        trace = [inertia]
        n_iter = 0
        for _ in range(max_iter):
            n_iter += 1
            sums, counts = _accumulate(x, labels, k, pool)
            new_centroids = centroids.copy()
            nonempty = counts > 0
            new_centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
            refill_dists = dists.copy()
            for cluster in np.flatnonzero(~nonempty):
                farthest = int(np.argmax(refill_dists))
                new_centroids[cluster] = x[farthest]
                refill_dists[farthest] = 0.0

            shift_num = float(np.sqrt(((new_centroids - centroids) ** 2).sum()))
            shift_den = float(np.sqrt((centroids**2).sum()))
            shift = shift_num / shift_den if shift_den > 0 else shift_num
            centroids = new_centroids

            labels, dists = _assign_all(x, x_norm, centroids, pool)
            new_inertia = float(dists.sum())
            if new_inertia > inertia * (1 + 1e-12) + 1e-12:
                raise AssertionError(
                    f"inertia increased: {inertia} -> {new_inertia} at iteration {n_iter}"
                )
            inertia = new_inertia
            trace.append(inertia)
            if shift < tol:
                break
    finally:
        if pool is not None:
            pool.shutdown()

    if not np.all(np.isfinite(centroids)):
        raise AssertionError("kmeans_fit produced a non-finite centroid")
    return ClusterModel(centroids, k, seed, inertia, n_iter, tuple(trace), normalize)


def kmeans_assign(model: ClusterModel, vectors: np.ndarray, n_threads: int = 1) -> np.ndarray:
    """Nearest-centroid labels; ties resolve to the lowest centroid index."""
    x = np.ascontiguousarray(np.asarray(vectors, dtype=np.float64))
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise DataError(
            f"vectors of shape {x.shape} do not match centroid dim {model.dim}"
        )
    x = _preprocess(x, model.normalize)
    x_norm = (x**2).sum(axis=1)
    pool = ThreadPoolExecutor(max_workers=n_threads) if n_threads > 1 else None
    try:
        labels, _ = _assign_all(x, x_norm, model.centroids, pool)
    finally:
        if pool is not None:
            pool.shutdown()
    return labels


def save_cluster_model(model: ClusterModel, out_dir: str | Path) -> None:
    """Write centroids as a tensor file plus a JSON sidecar (f32 on disk)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_tensor(model.centroids.astype(np.float32), out_dir / "centroids.stdt")
    sidecar = {
        "k": model.k,
        "seed": model.seed,
        "inertia": model.inertia,
        "n_iter": model.n_iter,
        "normalize": model.normalize,
    }
    with open(out_dir / "model.json", "w", encoding="utf-8") as f:
        json.dump(sidecar, f, sort_keys=True, indent=2)
        f.write("\n")


def load_cluster_model(model_dir: str | Path) -> ClusterModel:
    model_dir = Path(model_dir)
    centroids = read_tensor(model_dir / "centroids.stdt").astype(np.float64)
    with open(model_dir / "model.json", "r", encoding="utf-8") as f:
        sidecar = json.load(f)
    return ClusterModel(
        centroids,
        int(sidecar["k"]),
        int(sidecar["seed"]),
        float(sidecar["inertia"]),
        int(sidecar["n_iter"]),
        normalize=str(sidecar.get("normalize", "none")),
    )
