"""Random-forest regressor over log2(speedup), written from scratch.

Trees are grown by exhaustive greedy variance reduction over a fixed-size
random feature subset per node; candidate thresholds are midpoints between
consecutive distinct sorted values; ties resolve to the lowest feature index,
then the lowest threshold. Each tree draws its own RNG from a mix of the
forest seed and the tree index, so training is bit-reproducible regardless of
how many worker threads build trees.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .access_analysis import FEATURE_NAMES, FeatureVector
from .errors import ModelFormatError
from .seeding import mix_seed

FORMAT_NAME = "lmforest"
FORMAT_VERSION = 1
TARGET_FLOOR = -10.0  # log2 target for speedup-0 (infeasible) rows


@dataclass(frozen=True)
class Hyperparams:
    num_trees: int = 20
    features_per_node: int = 4
    max_depth: int | None = None
    min_samples_leaf: int = 1
    bootstrap: bool = True
    seed: int = 0


@dataclass
class Tree:
    """Array-of-nodes tree; feature -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    oob_indices: np.ndarray | None = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int32)
        rows = np.arange(len(X))
        while True:
            internal = self.feature[node] >= 0
            if not internal.any():
                return self.value[node]
            at = node[internal]
            xv = X[rows[internal], self.feature[at]]
            node[internal] = np.where(xv <= self.threshold[at], self.left[at], self.right[at])


@dataclass
class Forest:
    hyperparams: Hyperparams
    feature_names: tuple[str, ...]
    trees: list[Tree] = field(default_factory=list)


def speedup_to_target(speedup: float) -> float:
    return math.log2(speedup) if speedup > 0 else TARGET_FLOOR


def _best_split(X, y, rows, hp: Hyperparams, rng):
    """Exhaustive greedy search over a random feature subset; returns
    (feature, threshold, left_rows, right_rows) or None."""
    n_features = X.shape[1]
    k = min(hp.features_per_node, n_features)
    feats = np.sort(rng.choice(n_features, size=k, replace=False))
    msl = hp.min_samples_leaf
    best_sse = None
    best = None
    yr = y[rows]
    for f in feats:
        x = X[rows, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        if xs[0] == xs[-1]:
            continue
        ys = yr[order]
        s1 = np.cumsum(ys)
        s2 = np.cumsum(ys * ys)
        nn = len(xs)
        ks = np.nonzero(xs[:-1] < xs[1:])[0]
        if msl > 1:
            ks = ks[(ks + 1 >= msl) & (nn - ks - 1 >= msl)]
        if len(ks) == 0:
            continue
        nl = (ks + 1).astype(np.float64)
        nr = nn - nl
        sse = (s2[ks] - s1[ks] ** 2 / nl) + ((s2[-1] - s2[ks]) - (s1[-1] - s1[ks]) ** 2 / nr)
        # first minimum = lowest threshold within the feature
        pos = int(np.argmin(sse))
        if best_sse is None or sse[pos] < best_sse:
            kk = int(ks[pos])
            a, b = xs[kk], xs[kk + 1]
            thr = a + (b - a) / 2
            if thr >= b:  # midpoint rounded up between adjacent floats
                thr = a
            best_sse = float(sse[pos])
            best = (int(f), float(thr))
    if best is None:
        return None
    f, thr = best
    mask = X[rows, f] <= thr
    return f, thr, rows[mask], rows[~mask]


def _build_tree(X, y, hp: Hyperparams, tree_seed: int) -> Tree:
    rng = np.random.Generator(np.random.PCG64(tree_seed))
    n = len(y)
    if hp.bootstrap:
        sample = rng.integers(0, n, size=n)
        oob = np.setdiff1d(np.arange(n), sample)
    else:
        sample = np.arange(n)
        oob = None
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    stack = [(sample, 0, new_node())]
    while stack:
        rows, depth, slot = stack.pop()
        yv = y[rows]
        stop = (
            (hp.max_depth is not None and depth >= hp.max_depth)
            or len(rows) < 2 * hp.min_samples_leaf
            or bool(np.all(yv == yv[0]))
        )
        split = None if stop else _best_split(X, y, rows, hp, rng)
        if split is None:
            value[slot] = float(yv.mean())
            continue
        f, thr, lrows, rrows = split
        feature[slot] = f
        threshold[slot] = thr
        left[slot] = new_node()
        right[slot] = new_node()
        stack.append((rrows, depth + 1, right[slot]))
        stack.append((lrows, depth + 1, left[slot]))
    return Tree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=np.float64),
        oob_indices=oob,
    )


def train_arrays(
    X: np.ndarray,
    y: np.ndarray,
    hp: Hyperparams,
    feature_names: tuple[str, ...] | None = None,
    threads: int = 1,
) -> Forest:
    """Fit on a feature matrix and log2-speedup targets."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError(f"bad training shapes {X.shape} vs {y.shape}")
    if len(y) == 0:
        raise ValueError("empty training set")
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(X.shape[1]))
    seeds = [mix_seed(hp.seed, t) for t in range(hp.num_trees)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(lambda s: _build_tree(X, y, hp, s), seeds))
    else:
        trees = [_build_tree(X, y, hp, s) for s in seeds]
    return Forest(hyperparams=hp, feature_names=tuple(feature_names), trees=trees)


def train(rows, hp: Hyperparams = Hyperparams(), threads: int = 1) -> Forest:
    """Fit on labeled rows (anything with .features and .speedup); the target
    is log2(speedup) with infeasible zeros floored at -10."""
    X = np.stack([r.features.to_array() for r in rows])
    y = np.array([speedup_to_target(r.speedup) for r in rows], dtype=np.float64)
    return train_arrays(X, y, hp, feature_names=FEATURE_NAMES, threads=threads)


def _as_matrix(features) -> tuple[np.ndarray, bool]:
    if isinstance(features, FeatureVector):
        return features.to_array()[None, :], True
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


def predict(forest: Forest, features):
    """Predicted speedup(s): 2 ** mean(per-tree leaf values)."""
    X, single = _as_matrix(features)
    if X.shape[1] != len(forest.feature_names):
        raise ValueError(
            f"feature count {X.shape[1]} does not match model ({len(forest.feature_names)})"
        )
    acc = np.zeros(len(X), dtype=np.float64)
    for tree in forest.trees:
        acc += tree.predict(X)
    pred = 2.0 ** (acc / len(forest.trees))
    return float(pred[0]) if single else pred


def decide(forest: Forest, features):
    """True = apply the local-memory optimization (predicted speedup > 1)."""
    return predict(forest, features) > 1.0


def _fmt(v: float) -> str:
    return repr(float(v))


def save(forest: Forest, path) -> None:
    """Versioned plain-text dump; node lines are a pre-order walk."""
    hp = forest.hyperparams
    lines = [
        f"{FORMAT_NAME} {FORMAT_VERSION}",
        f"num_trees {hp.num_trees}",
        f"features_per_node {hp.features_per_node}",
        f"max_depth {'none' if hp.max_depth is None else hp.max_depth}",
        f"min_samples_leaf {hp.min_samples_leaf}",
        f"bootstrap {'true' if hp.bootstrap else 'false'}",
        f"seed {hp.seed}",
        f"num_features {len(forest.feature_names)}",
        "feature_names " + ",".join(forest.feature_names),
    ]
    for t, tree in enumerate(forest.trees):
        lines.append(f"tree {t}")
        stack = [0]
        while stack:
            node = stack.pop()
            if tree.feature[node] < 0:
                lines.append(f"leaf {_fmt(tree.value[node])}")
            else:
                lines.append(f"node {tree.feature[node]} {_fmt(tree.threshold[node])}")
                stack.append(int(tree.right[node]))
                stack.append(int(tree.left[node]))
    lines.append("end")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


class _LineReader:
    def __init__(self, path):
        with open(path, encoding="utf-8") as f:
            self.lines = f.read().splitlines()
        self.pos = 0

    def next(self) -> tuple[int, str]:
        if self.pos >= len(self.lines):
            raise ModelFormatError(f"line {self.pos + 1}: unexpected end of file")
        self.pos += 1
        return self.pos, self.lines[self.pos - 1]


def _header_int(reader: _LineReader, key: str) -> int:
    ln, line = reader.next()
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise ModelFormatError(f"line {ln}: expected '{key} <value>', got {line!r}")
    try:
        return int(parts[1])
    except ValueError as e:
        raise ModelFormatError(f"line {ln}: bad integer for {key}: {parts[1]!r}") from e


def load(path) -> Forest:
    """Parse a saved forest; malformed input raises ModelFormatError naming
    the offending line."""
    r = _LineReader(path)
    ln, line = r.next()
    if line.split() != [FORMAT_NAME, str(FORMAT_VERSION)]:
        raise ModelFormatError(f"line {ln}: unsupported format header {line!r}")
    num_trees = _header_int(r, "num_trees")
    if num_trees < 1:
        raise ModelFormatError(f"line 2: num_trees {num_trees} < 1")
    features_per_node = _header_int(r, "features_per_node")
    ln, line = r.next()
    if not line.startswith("max_depth "):
        raise ModelFormatError(f"line {ln}: expected max_depth, got {line!r}")
    raw_depth = line.split(maxsplit=1)[1]
    max_depth = None if raw_depth == "none" else int(raw_depth)
    min_samples_leaf = _header_int(r, "min_samples_leaf")
    ln, line = r.next()
    if line not in ("bootstrap true", "bootstrap false"):
        raise ModelFormatError(f"line {ln}: expected bootstrap true|false, got {line!r}")
    bootstrap = line.endswith("true")
    seed = _header_int(r, "seed")
    num_features = _header_int(r, "num_features")
    ln, line = r.next()
    if not line.startswith("feature_names "):
        raise ModelFormatError(f"line {ln}: expected feature_names, got {line!r}")
    names = tuple(line.split(maxsplit=1)[1].split(","))
    if len(names) != num_features:
        raise ModelFormatError(f"line {ln}: {len(names)} names for {num_features} features")
    hp = Hyperparams(num_trees, features_per_node, max_depth, min_samples_leaf, bootstrap, seed)

    trees = []
    for t in range(num_trees):
        ln, line = r.next()
        if line != f"tree {t}":
            raise ModelFormatError(f"line {ln}: expected 'tree {t}', got {line!r}")
        feature, threshold, left, right, value = [], [], [], [], []

        def read_one() -> int:
            """Read a single node line; returns its slot, -1 marks a leaf in
            feature[]."""
            ln, line = r.next()
            parts = line.split()
            slot = len(feature)
            if parts and parts[0] == "leaf" and len(parts) == 2:
                try:
                    v = float(parts[1])
                except ValueError as e:
                    raise ModelFormatError(f"line {ln}: bad leaf value {parts[1]!r}") from e
                feature.append(-1)
                threshold.append(0.0)
                value.append(v)
            elif parts and parts[0] == "node" and len(parts) == 3:
                try:
                    f = int(parts[1])
                    thr = float(parts[2])
                except ValueError as e:
                    raise ModelFormatError(f"line {ln}: bad node line {line!r}") from e
                if not 0 <= f < num_features:
                    raise ModelFormatError(f"line {ln}: feature index {f} out of range")
                feature.append(f)
                threshold.append(thr)
                value.append(0.0)
            else:
                raise ModelFormatError(f"line {ln}: expected node or leaf, got {line!r}")
            left.append(-1)
            right.append(-1)
            return slot

        # pre-order rebuild without recursion: attach each node under the
        # innermost internal node still missing a child
        root = read_one()
        open_nodes = [root] if feature[root] >= 0 else []
        while open_nodes:
            slot = read_one()
            parent = open_nodes[-1]
            if left[parent] == -1:
                left[parent] = slot
            else:
                right[parent] = slot
                open_nodes.pop()
            if feature[slot] >= 0:
                open_nodes.append(slot)
        trees.append(
            Tree(
                feature=np.array(feature, dtype=np.int32),
                threshold=np.array(threshold, dtype=np.float64),
                left=np.array(left, dtype=np.int32),
                right=np.array(right, dtype=np.int32),
                value=np.array(value, dtype=np.float64),
            )
        )
    ln, line = r.next()
    if line != "end":
        raise ModelFormatError(f"line {ln}: expected 'end', got {line!r}")
    return Forest(hyperparams=hp, feature_names=names, trees=trees)
