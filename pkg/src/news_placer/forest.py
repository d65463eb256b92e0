"""Random forest classifier built on Gini-split decision trees.

Bagged trees over bootstrap samples with per-node feature subsampling.
Determinism is pinned down to tie handling: candidate features are scanned
in ascending index order, thresholds in ascending value order, and only a
strictly better impurity decrease displaces the current split, so equal
splits resolve to the lowest feature index and lowest threshold. Class
weighting, when enabled, balances the impurity computation only — leaf
histograms stay raw counts.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

FOREST_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 2
    features_per_split: int | None = None
    class_weighting: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be positive")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be positive")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValueError("features_per_split must be positive")


@dataclass
class _Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    hist: np.ndarray  # raw class counts per node


@dataclass
class RandomForest:
    config: ForestConfig
    classes: np.ndarray
    n_features: int
    trees: list[_Tree] = field(default_factory=list)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Mean of per-tree leaf class frequencies."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ValueError(
                f"expected (n, {self.n_features}) matrix, got {x.shape}"
            )
        total = np.zeros((x.shape[0], len(self.classes)))
        rows = np.arange(x.shape[0])
        for tree in self.trees:
            node = np.zeros(x.shape[0], dtype=np.int64)
            while True:
                feat = tree.feature[node]
                active = feat >= 0
                if not np.any(active):
                    break
                idx = rows[active]
                f = feat[active]
                go_left = x[idx, f] <= tree.threshold[node[active]]
                node[idx] = np.where(
                    go_left, tree.left[node[active]], tree.right[node[active]]
                )
            leaf = tree.hist[node]
            total += leaf / leaf.sum(axis=1, keepdims=True)
        return total / len(self.trees)

    def predict(self, x: np.ndarray) -> np.ndarray:
        proba = self.predict_proba(x)
        return self.classes[np.argmax(proba, axis=1)]


def _grow_tree(
    x: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    class_weight: np.ndarray,
    config: ForestConfig,
    rng: np.random.Generator,
) -> _Tree:
    n, d = x.shape
    m = config.features_per_split
    if m is None:
        m = max(1, int(math.isqrt(d)))
    m = min(m, d)

    feature = []
    threshold = []
    left = []
    right = []
    hist = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        hist.append(None)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, members, depth = stack.pop()
        labels = y[members]
        counts = np.bincount(labels, minlength=n_classes)
        hist[node] = counts
        if (
            depth >= config.max_depth
            or members.size < 2 * config.min_leaf
            or np.count_nonzero(counts) < 2
        ):
            continue
        weights = class_weight[labels]
        total_w = weights.sum()
        parent_gini = 1.0 - float(
            ((np.bincount(labels, weights=weights, minlength=n_classes) / total_w) ** 2).sum()
        )
        if m < d:
            candidates = np.sort(rng.choice(d, size=m, replace=False))
        else:
            candidates = np.arange(d)
        # zero-gain splits are taken: an impure node keeps growing while any
        # legal cut exists, which is what lets depth-2 trees solve XOR
        best_gain = -math.inf
        best = None
        for f in candidates:
            values = x[members, f]
            order = np.argsort(values, kind="stable")
            sv = values[order]
            sl = labels[order]
            distinct = np.flatnonzero(sv[1:] > sv[:-1]) + 1
            if distinct.size == 0:
                continue
            onehot = np.zeros((members.size, n_classes))
            onehot[np.arange(members.size), sl] = class_weight[sl]
            cum = np.cumsum(onehot, axis=0)
            left_w = cum[distinct - 1]
            right_w = cum[-1] - left_w
            lw = left_w.sum(axis=1)
            rw = right_w.sum(axis=1)
            gini_l = 1.0 - ((left_w / lw[:, None]) ** 2).sum(axis=1)
            gini_r = 1.0 - ((right_w / rw[:, None]) ** 2).sum(axis=1)
            gains = parent_gini - (lw * gini_l + rw * gini_r) / total_w
            ok = np.flatnonzero(
                (distinct >= config.min_leaf)
                & (members.size - distinct >= config.min_leaf)
            )
            if ok.size == 0:
                continue
            pos = ok[int(np.argmax(gains[ok]))]  # first max = lowest threshold
            gain = float(gains[pos])
            if gain > best_gain:
                cut = distinct[pos]
                best_gain = gain
                best = (int(f), float((sv[cut - 1] + sv[cut]) / 2.0), order, cut)
        if best is None:
            continue
        f, thr, order, cut = best
        left_members = members[order[:cut]]
        right_members = members[order[cut:]]
        feature[node] = f
        threshold[node] = thr
        lid = new_node()
        rid = new_node()
        left[node] = lid
        right[node] = rid
        stack.append((rid, right_members, depth + 1))
        stack.append((lid, left_members, depth + 1))
    return _Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        hist=np.asarray(hist, dtype=np.float64),
    )


def train_forest(x: np.ndarray, y, config: ForestConfig = ForestConfig()) -> RandomForest:
    """Fit a forest on float features and arbitrary sortable labels."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y)
    if x.ndim != 2:
        raise ValueError("feature matrix must be 2-dimensional")
    if x.shape[0] != y.shape[0]:
        raise ValueError("feature and label counts differ")
    if x.shape[0] == 0:
        raise ValueError("cannot train on an empty matrix")
    classes, y_idx = np.unique(y, return_inverse=True)
    n_classes = len(classes)
    if config.class_weighting and n_classes > 1:
        freq = np.bincount(y_idx, minlength=n_classes)
        class_weight = x.shape[0] / (n_classes * np.maximum(freq, 1))
    else:
        class_weight = np.ones(n_classes)
    forest = RandomForest(config=config, classes=classes, n_features=x.shape[1])
    n = x.shape[0]
    for t in range(config.n_trees):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, t]))
        sample = rng.integers(0, n, size=n)
        forest.trees.append(
            _grow_tree(x[sample], y_idx[sample], n_classes, class_weight, config, rng)
        )
    return forest


# ---------------------------------------------------------------------------
# Persistence: a JSON sidecar with config and classes, arrays in one npz.


def save_forest(directory, forest: RandomForest, name: str = "forest") -> None:
    os.makedirs(directory, exist_ok=True)
    meta = {
        "format_version": FOREST_FORMAT_VERSION,
        "config": {
            "n_trees": forest.config.n_trees,
            "max_depth": forest.config.max_depth,
            "min_leaf": forest.config.min_leaf,
            "features_per_split": forest.config.features_per_split,
            "class_weighting": forest.config.class_weighting,
            "seed": forest.config.seed,
        },
        "classes": [_json_scalar(c) for c in forest.classes],
        "classes_dtype": str(forest.classes.dtype),
        "n_features": forest.n_features,
        "n_nodes": [len(t.feature) for t in forest.trees],
    }
    with open(os.path.join(directory, name + ".json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
        fh.write("\n")
    arrays = {}
    for part in ("feature", "threshold", "left", "right"):
        arrays[part] = np.concatenate([getattr(t, part) for t in forest.trees])
    arrays["hist"] = np.concatenate([t.hist for t in forest.trees], axis=0)
    np.savez_compressed(os.path.join(directory, name + ".npz"), **arrays)


def _json_scalar(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return str(value)


def load_forest(directory, name: str = "forest") -> RandomForest:
    with open(os.path.join(directory, name + ".json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    if meta.get("format_version") != FOREST_FORMAT_VERSION:
        raise ValueError(f"{directory}: unsupported forest format")
    config = ForestConfig(**meta["config"])
    classes = np.asarray(meta["classes"], dtype=np.dtype(meta["classes_dtype"]))
    data = np.load(os.path.join(directory, name + ".npz"))
    trees = []
    offset = 0
    for n_nodes in meta["n_nodes"]:
        sl = slice(offset, offset + n_nodes)
        trees.append(
            _Tree(
                feature=data["feature"][sl],
                threshold=data["threshold"][sl],
                left=data["left"][sl],
                right=data["right"][sl],
                hist=data["hist"][sl],
            )
        )
        offset += n_nodes
    forest = RandomForest(
        config=config,
        classes=classes,
        n_features=meta["n_features"],
        trees=trees,
    )
    return forest
