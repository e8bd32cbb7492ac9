"""Decision-quality metrics.

Count-based accuracy scores a prediction 1 when it matches the oracle
decision (labeled speedup > 1) and 0 otherwise. Penalty-weighted accuracy
replaces the 0 with the performance actually retained: the speedup of the
chosen action over the best action, so a mis-prediction that costs almost
nothing scores almost 1. A tie (speedup exactly 1) scores 1 either way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check(decisions, speedups) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(decisions, dtype=bool)
    s = np.asarray(speedups, dtype=np.float64)
    if d.shape != s.shape or d.ndim != 1:
        raise ValueError(f"decisions {d.shape} and speedups {s.shape} must be equal-length 1D")
    if d.size == 0:
        raise ValueError("empty evaluation set")
    if (s < 0).any():
        raise ValueError("negative speedup")
    return d, s


def oracle_decisions(speedups) -> np.ndarray:
    """The labeled best action: optimize iff speedup > 1 (strict)."""
    return np.asarray(speedups, dtype=np.float64) > 1.0


def count_accuracy(decisions, speedups) -> float:
    """Fraction of decisions matching the oracle."""
    d, s = _check(decisions, speedups)
    return float(np.mean(d == (s > 1.0)))


def penalty_scores(decisions, speedups) -> np.ndarray:
    """Per-instance retained performance: chosen speedup / best speedup,
    capped at 1. Leaving a kernel alone has speedup 1 by definition."""
    d, s = _check(decisions, speedups)
    chosen = np.where(d, s, 1.0)
    best = np.maximum(s, 1.0)
    return np.minimum(chosen / best, 1.0)


def penalty_weighted_accuracy(decisions, speedups) -> tuple[float, float, float]:
    """(mean, min, max) of the per-instance penalty scores."""
    scores = penalty_scores(decisions, speedups)
    return float(scores.mean()), float(scores.min()), float(scores.max())


def default_bucket_edges() -> list[float]:
    """Logarithmic edges from 1/32x to 32x, one bucket per octave."""
    return [2.0**k for k in range(-5, 6)]


def speedup_histogram(speedups, bucket_edges=None) -> list[tuple[float, float, int]]:
    """Counts per half-open bucket [lo, hi), plus underflow and overflow rows
    bounded by -inf/+inf. Bucket edges must be strictly increasing."""
    if bucket_edges is None:
        bucket_edges = default_bucket_edges()
    edges = [float(e) for e in bucket_edges]
    if not edges or any(a >= b for a, b in zip(edges, edges[1:])):
        raise ValueError("bucket edges must be non-empty and strictly increasing")
    s = np.asarray(speedups, dtype=np.float64)
    which = np.searchsorted(edges, s, side="right")  # 0 = underflow
    counts = np.bincount(which, minlength=len(edges) + 1)
    bounds = [-np.inf] + edges + [np.inf]
    return [(bounds[k], bounds[k + 1], int(counts[k])) for k in range(len(edges) + 1)]


@dataclass(frozen=True)
class EvalReport:
    n: int
    count_accuracy: float
    penalty_weighted_accuracy: float
    min_score: float
    max_score: float
    true_optimize: int
    false_optimize: int
    true_leave: int
    false_leave: int

    def as_kv(self) -> str:
        """Machine-readable key=value rendering, one pair per line."""
        pairs = [
            ("n", self.n),
            ("count_accuracy", repr(self.count_accuracy)),
            ("penalty_weighted_accuracy", repr(self.penalty_weighted_accuracy)),
            ("min_score", repr(self.min_score)),
            ("max_score", repr(self.max_score)),
            ("true_optimize", self.true_optimize),
            ("false_optimize", self.false_optimize),
            ("true_leave", self.true_leave),
            ("false_leave", self.false_leave),
        ]
        return "".join(f"{k}={v}\n" for k, v in pairs)

    def summary(self) -> str:
        return (
            f"instances {self.n}: count accuracy {self.count_accuracy:.4f}, "
            f"penalty-weighted {self.penalty_weighted_accuracy:.4f} "
            f"(min {self.min_score:.4f}, max {self.max_score:.4f})"
        )


def evaluate(decisions, speedups) -> EvalReport:
    d, s = _check(decisions, speedups)
    oracle = s > 1.0
    pw, lo, hi = penalty_weighted_accuracy(d, s)
    return EvalReport(
        n=int(d.size),
        count_accuracy=count_accuracy(d, s),
        penalty_weighted_accuracy=pw,
        min_score=lo,
        max_score=hi,
        true_optimize=int(np.sum(d & oracle)),
        false_optimize=int(np.sum(d & ~oracle)),
        true_leave=int(np.sum(~d & ~oracle)),
        false_leave=int(np.sum(~d & oracle)),
    )
