"""Leaf label distributions, centroids, and cross-domain pivot matching.

A leaf's signature is its label distribution (class frequencies of the
records in the leaf) plus a centroid row: per numeric attribute the member
mean plus the natural log of the sample standard deviation (the log term is
omitted for single-member leaves and zero spread), per categorical attribute
the mode. Signatures are deduplicated per domain and then matched one-to-one
across domains by Jensen-Shannon divergence; the matched rows are the pivots
that bridge the two feature spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import CATEGORICAL, Dataset
from .errors import DataError, EmptyDatasetError, MatchingError
from .forest import LeafRef

#: Rows whose distributions agree to this many decimals count as duplicates.
DEDUP_DECIMALS = 6


@dataclass(frozen=True, eq=False)
class DistributionBundle:
    """Per-leaf label distribution matrix V, centroid matrix W, labels R."""

    V: np.ndarray
    W: np.ndarray
    R: np.ndarray
    schema: tuple
    class_names: tuple[str, ...]
    domain_tag: str

    def __post_init__(self):
        V = np.asarray(self.V, dtype=np.float64)
        if V.ndim != 2 or V.shape[0] < 1:
            raise DataError("V must be a non-empty [L, C] matrix")
        if V.shape[1] != len(self.class_names):
            raise DataError("V columns must match class_names")
        if (V < 0).any():
            raise DataError("V entries must be non-negative")
        if np.abs(V.sum(axis=1) - 1.0).max() > 1e-9:
            raise DataError("every V row must sum to 1")
        if not np.array_equal(np.asarray(self.R), np.argmax(V, axis=1)):
            raise DataError("R must be the argmax of each V row")
        if np.asarray(self.W).shape != (V.shape[0], len(self.schema)):
            raise DataError("W must be [L, d] for the bundle schema")

    @property
    def n_rows(self) -> int:
        return self.V.shape[0]

    def to_dict(self) -> dict:
        return {
            "domain": self.domain_tag,
            "class_names": list(self.class_names),
            "label_distributions": self.V.tolist(),
            "centroids": self.W.tolist(),
            "centroid_labels": self.R.tolist(),
        }


@dataclass(frozen=True, eq=False)
class PivotSet:
    """One-to-one matched (source row, target row) pairs below the threshold."""

    pairs: tuple[tuple[int, int, float], ...]
    Ws: np.ndarray
    Wt: np.ndarray
    Rs: np.ndarray
    Rt: np.ndarray
    Vs: np.ndarray
    Vt: np.ndarray
    source_classes: tuple[str, ...]
    target_classes: tuple[str, ...]
    shared_classes: tuple[str, ...]
    threshold: float

    @property
    def n_pivots(self) -> int:
        return len(self.pairs)

    @property
    def divergences(self) -> np.ndarray:
        return np.array([p[2] for p in self.pairs])

    def to_dict(self) -> dict:
        return {
            "n_pivots": self.n_pivots,
            "threshold": self.threshold,
            "shared_classes": list(self.shared_classes),
            "pairs": [
                {"source_row": i, "target_row": k, "divergence": d}
                for i, k, d in self.pairs
            ],
        }


def _centroid_row(ds: Dataset, members: np.ndarray) -> np.ndarray:
    row = np.empty(ds.d)
    sub = ds.records[members]
    for j, attr in enumerate(ds.schema):
        col = sub[:, j]
        if attr.kind == CATEGORICAL:
            counts = np.bincount(col.astype(np.int64), minlength=len(attr.categories))
            row[j] = float(np.argmax(counts))
        else:
            mean = col.mean()
            if col.shape[0] < 2:
                row[j] = mean
                continue
            std = col.std(ddof=1)
            row[j] = mean if std == 0.0 else mean + math.log(std)
    return row


def extract_distributions(ds: Dataset, leaves: list[LeafRef]) -> DistributionBundle:
    """Label distribution, centroid and majority label for every leaf.

    Row i of the result describes leaves[i]; argmax ties go to the lowest
    class index.
    """
    if not leaves:
        raise EmptyDatasetError("no leaves to extract distributions from")
    C = len(ds.class_names)
    V = np.empty((len(leaves), C))
    W = np.empty((len(leaves), ds.d))
    for i, leaf in enumerate(leaves):
        members = np.asarray(leaf.members, dtype=np.int64)
        if members.size == 0:
            raise EmptyDatasetError(
                f"leaf {leaf.leaf_id} of tree {leaf.tree_index} has no members"
            )
        counts = np.bincount(ds.labels[members], minlength=C)
        V[i] = counts / counts.sum()
        W[i] = _centroid_row(ds, members)
    R = np.argmax(V, axis=1)
    return DistributionBundle(V, W, R, ds.schema, ds.class_names, ds.domain_tag)


def dedup(bundle: DistributionBundle) -> tuple[DistributionBundle, np.ndarray]:
    """Merge rows whose distributions agree after 6-decimal rounding.

    Merged centroids average numeric attributes and take the mode of modes
    for categorical ones (ties -> lowest category index). Returns the merged
    bundle plus a row map from each input row to its merged row.
    """
    keys = np.round(bundle.V, DEDUP_DECIMALS)
    groups: dict[tuple, list[int]] = {}
    order = []
    for i in range(bundle.n_rows):
        key = tuple(keys[i])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(i)
    row_map = np.empty(bundle.n_rows, dtype=np.int64)
    V_rows, W_rows = [], []
    for new_row, key in enumerate(order):
        rows = groups[key]
        row_map[rows] = new_row
        V_rows.append(bundle.V[rows[0]])
        merged = np.empty(len(bundle.schema))
        for j, attr in enumerate(bundle.schema):
            cells = bundle.W[rows, j]
            if attr.kind == CATEGORICAL:
                counts = np.bincount(cells.astype(np.int64), minlength=len(attr.categories))
                merged[j] = float(np.argmax(counts))
            else:
                merged[j] = cells.mean()
        W_rows.append(merged)
    V = np.array(V_rows)
    merged_bundle = DistributionBundle(
        V, np.array(W_rows), np.argmax(V, axis=1),
        bundle.schema, bundle.class_names, bundle.domain_tag,
    )
    return merged_bundle, row_map


def jsd(p, q) -> float:
    """Jensen-Shannon divergence with base-2 logarithms, in [0, 1].

    jsd(p, q) = KL(p || m)/2 + KL(q || m)/2 with m = (p + q)/2;
    0 * log 0 terms contribute nothing.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise DataError("jsd needs two equal-length probability vectors")
    for v in (p, q):
        if (v < 0).any() or abs(v.sum() - 1.0) > 1e-9:
            raise DataError("jsd inputs must be probability distributions")
    m = (p + q) / 2.0
    total = 0.0
    for a in (p, q):
        nz = a > 0
        total += 0.5 * float(np.sum(a[nz] * np.log2(a[nz] / m[nz])))
    return min(max(total, 0.0), 1.0)


def _shared_projection(bundle: DistributionBundle, shared: tuple[str, ...]) -> np.ndarray:
    idx = [bundle.class_names.index(name) for name in shared]
    return bundle.V[:, idx]


def match_pivots(src: DistributionBundle, tgt: DistributionBundle,
                 threshold: float = 0.1) -> PivotSet:
    """Greedy one-to-one matching of deduplicated rows by ascending JSD.

    Distributions are compared over the intersection of the two class sets
    (renormalized); rows with no mass on shared classes cannot match. Only
    pairs with divergence strictly below the threshold are kept, and each
    source and target row is used at most once.
    """
    shared = tuple(name for name in src.class_names if name in tgt.class_names)
    if not shared:
        raise MatchingError("source and target share no class labels")
    ps = _shared_projection(src, shared)
    pt = _shared_projection(tgt, shared)
    ssum = ps.sum(axis=1)
    tsum = pt.sum(axis=1)
    candidates = []
    for i in range(src.n_rows):
        if ssum[i] <= 0:
            continue
        pi = ps[i] / ssum[i]
        for k in range(tgt.n_rows):
            if tsum[k] <= 0:
                continue
            div = jsd(pi, pt[k] / tsum[k])
            if div < threshold:
                candidates.append((div, i, k))
    candidates.sort()
    used_src, used_tgt = set(), set()
    pairs = []
    for div, i, k in candidates:
        if i in used_src or k in used_tgt:
            continue
        used_src.add(i)
        used_tgt.add(k)
        pairs.append((i, k, div))
    src_rows = [p[0] for p in pairs]
    tgt_rows = [p[1] for p in pairs]
    return PivotSet(
        pairs=tuple(pairs),
        Ws=src.W[src_rows] if pairs else np.empty((0, src.W.shape[1])),
        Wt=tgt.W[tgt_rows] if pairs else np.empty((0, tgt.W.shape[1])),
        Rs=src.R[src_rows] if pairs else np.empty(0, dtype=np.int64),
        Rt=tgt.R[tgt_rows] if pairs else np.empty(0, dtype=np.int64),
        Vs=src.V[src_rows] if pairs else np.empty((0, src.V.shape[1])),
        Vt=tgt.V[tgt_rows] if pairs else np.empty((0, tgt.V.shape[1])),
        source_classes=src.class_names,
        target_classes=tgt.class_names,
        shared_classes=shared,
        threshold=threshold,
    )
