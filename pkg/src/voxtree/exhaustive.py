"""Exhaustive graph clustering over the whole scale parameter space.

One greedy pass over the weight-sorted edge list merges two regions when the
connecting weight is within both regions' internal variation plus k/size
allowance. A single pass at k additionally tracks the smallest k' > k at
which any blocked edge would flip, so each pass yields a maximal contiguous
interval [k_start, k_end) of k values that all produce the same partition.
Chaining passes from each interval end enumerates every distinct partition
the method can ever produce, without sampling.

The predicate is evaluated in the multiplied-out form

    (w - A.int_var) * A.size <= k  and  (w - B.int_var) * B.size <= k

so that interval endpoints computed from the same products are consistent
with the merge decisions bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .svgraph import AdjacencyGraph

THRESHOLD_RULES = ("max", "min")


@dataclass
class RegionState:
    """Mutable per-region bookkeeping during one clustering pass."""

    id: int
    size: float
    int_var: float = 0.0


def merge_predicate(w: float, A: RegionState, B: RegionState, k: float) -> bool:
    """True iff w <= min(A.int_var + k/A.size, B.int_var + k/B.size)."""
    return (w - A.int_var) * A.size <= k and (w - B.int_var) * B.size <= k


def edge_flip_threshold(w: float, A: RegionState, B: RegionState) -> float:
    """Smallest k at which the merge predicate becomes true for this edge.

    Both sides of the predicate must hold, so the flip point is the max of
    the two per-region terms.
    """
    return max((w - A.int_var) * A.size, (w - B.int_var) * B.size)


@dataclass
class IntervalClustering:
    """A partition plus the maximal contiguous k interval producing it."""

    k_start: float
    k_end: float                       # math.inf for the terminal interval
    partition: np.ndarray              # uint32 labels, canonical by node order
    region_count: int

    def contains(self, k: float) -> bool:
        return self.k_start <= k < self.k_end

    def same_partition(self, other: "IntervalClustering") -> bool:
        return self.region_count == other.region_count and np.array_equal(
            self.partition, other.partition
        )


@dataclass
class SweepConfig:
    initial_range_width: float = 50.0
    growth_factor: float = 1.5
    workers: int = 12
    threshold_rule: str = "max"

    def __post_init__(self):
        if self.initial_range_width <= 0:
            raise ValueError("initial_range_width must be > 0")
        if self.growth_factor <= 1:
            raise ValueError("growth_factor must be > 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.threshold_rule not in THRESHOLD_RULES:
            raise ValueError(f"threshold_rule must be one of {THRESHOLD_RULES}")


def _edge_tuples(graph: AdjacencyGraph) -> list:
    cached = getattr(graph, "_edge_tuple_cache", None)
    if cached is None:
        cached = list(zip(graph.edges_w.tolist(),
                          graph.edges_a.tolist(),
                          graph.edges_b.tolist()))
        graph._edge_tuple_cache = cached
    return cached


def _canonical_labels(parent: list, n: int) -> tuple[np.ndarray, int]:
    labels = np.empty(n, dtype=np.uint32)
    mapping: dict[int, int] = {}
    for i in range(n):
        r = i
        while parent[r] != r:
            r = parent[r]
        lbl = mapping.get(r)
        if lbl is None:
            lbl = len(mapping)
            mapping[r] = lbl
        labels[i] = lbl
    return labels, len(mapping)


def _fh_pass(graph: AdjacencyGraph, k: float, threshold_rule: str,
             track: bool) -> IntervalClustering:
    n = graph.node_count
    parent = list(range(n))
    size = graph.node_sizes.astype(np.float64).tolist()
    int_var = [0.0] * n
    k_end = math.inf

    for w, a, b in _edge_tuples(graph):
        ra = a
        while parent[ra] != ra:
            parent[ra] = parent[parent[ra]]
            ra = parent[ra]
        rb = b
        while parent[rb] != rb:
            parent[rb] = parent[parent[rb]]
            rb = parent[rb]
        if ra == rb:
            continue
        ta = (w - int_var[ra]) * size[ra]
        tb = (w - int_var[rb]) * size[rb]
        if ta <= k and tb <= k:
            # merge; root choice does not affect the partition
            if size[ra] < size[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            size[ra] += size[rb]
            int_var[ra] = w
        elif track:
            if threshold_rule == "max" or (ta <= k or tb <= k):
                flip = ta if ta > tb else tb
            else:
                flip = ta if ta < tb else tb
            if flip < k_end:
                k_end = flip

    labels, count = _canonical_labels(parent, n)
    return IntervalClustering(k_start=k, k_end=k_end, partition=labels,
                              region_count=count)


def fh_run(graph: AdjacencyGraph, k: float) -> np.ndarray:
    """Plain single clustering at a fixed k; used as the sampling oracle."""
    if graph.node_count == 0:
        raise ValueError("cannot cluster an empty graph")
    return _fh_pass(graph, k, "max", track=False).partition


def fh_run_tracked(graph: AdjacencyGraph, k_start: float,
                   threshold_rule: str = "max") -> IntervalClustering:
    """One clustering pass that also tracks its maximal k interval."""
    if graph.node_count == 0:
        raise ValueError("cannot cluster an empty graph")
    if k_start < 0:
        raise ValueError("k_start must be >= 0")
    if threshold_rule not in THRESHOLD_RULES:
        raise ValueError(f"threshold_rule must be one of {THRESHOLD_RULES}")
    return _fh_pass(graph, k_start, threshold_rule, track=True)


def _chain_range(graph, r0: float, r1: float, threshold_rule: str) -> list:
    """Chase intervals from r0; past r1 only to finish off a terminal chain."""
    out = []
    k = r0
    terminal = False
    while True:
        iv = fh_run_tracked(graph, k, threshold_rule)
        out.append(iv)
        if iv.region_count <= 2:
            terminal = True
        if iv.k_end == math.inf:
            break
        if iv.k_end >= r1 and not terminal:
            break
        k = iv.k_end
    return out


def _coalesce(intervals: list) -> list:
    merged: list[IntervalClustering] = []
    for iv in sorted(intervals, key=lambda v: (v.k_start, v.k_end)):
        if merged and merged[-1].same_partition(iv) and iv.k_start <= merged[-1].k_end:
            merged[-1].k_end = max(merged[-1].k_end, iv.k_end)
        elif merged and iv.k_start < merged[-1].k_end:
            if iv.k_end <= merged[-1].k_end:
                continue                     # fully shadowed duplicate
            raise AssertionError(
                f"inconsistent overlapping intervals at k={iv.k_start}"
            )
        else:
            merged.append(iv)
    return merged


def exhaustive_cluster(graph: AdjacencyGraph, config: SweepConfig | None = None) -> list:
    """Enumerate every distinct clustering for k in [0, inf).

    Work is split into disjoint processing ranges [0, w), [w, w*g), ... that
    grow geometrically; each range re-derives the interval containing its
    start, and the duplicates are coalesced away, so the result is identical
    for any worker count. The sweep stops once a range ends with two regions
    or fewer; the returned list always terminates with the single-region
    interval [k, inf).
    """
    if config is None:
        config = SweepConfig()
    if graph.node_count == 0:
        raise ValueError("cannot cluster an empty graph")

    ranges = []

    def range_bounds(i: int) -> tuple[float, float]:
        while len(ranges) <= i:
            if not ranges:
                ranges.append((0.0, config.initial_range_width))
            else:
                prev = ranges[-1]
                width = (prev[1] - prev[0]) * config.growth_factor
                ranges.append((prev[1], prev[1] + width))
        return ranges[i]

    def is_terminal(intervals: list) -> bool:
        # <=2 regions per the stop rule; an infinite interval also ends the
        # sweep (nothing can ever flip again, e.g. disconnected graphs)
        return any(iv.region_count <= 2 or iv.k_end == math.inf
                   for iv in intervals)

    results: dict[int, list] = {}
    if config.workers == 1:
        i = 0
        while True:
            r0, r1 = range_bounds(i)
            results[i] = _chain_range(graph, r0, r1, config.threshold_rule)
            if is_terminal(results[i]):
                break
            i += 1
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = {}
            next_range = 0
            check = 0
            done = False
            while not done:
                while len(futures) < config.workers:
                    r0, r1 = range_bounds(next_range)
                    futures[next_range] = pool.submit(
                        _chain_range, graph, r0, r1, config.threshold_rule
                    )
                    next_range += 1
                results[check] = futures.pop(check).result()
                if is_terminal(results[check]):
                    # later ranges would only duplicate the terminal chain
                    done = True
                    for f in futures.values():
                        f.cancel()
                check += 1

    intervals = [iv for i in sorted(results) for iv in results[i]]
    merged = _coalesce(intervals)

    # keep everything through the terminal interval; for connected graphs
    # that is the single-region tail
    final = next((j for j, iv in enumerate(merged)
                  if iv.region_count == 1 or iv.k_end == math.inf), None)
    if final is not None:
        merged = merged[: final + 1]

    # tiling sanity: contiguous cover of [0, K_stop) ending in the 1-region tail
    if merged[0].k_start != 0.0:
        raise AssertionError("interval list does not start at k = 0")
    for prev, nxt in zip(merged, merged[1:]):
        if prev.k_end != nxt.k_start:
            raise AssertionError(
                f"gap or overlap between intervals at k={prev.k_end} vs {nxt.k_start}"
            )
    return merged


def distinct_partitions(intervals) -> set:
    """Canonical partition tuples of an interval list (or raw label arrays)."""
    out = set()
    for iv in intervals:
        labels = iv.partition if isinstance(iv, IntervalClustering) else iv
        out.add(tuple(int(v) for v in labels))
    return out


class ExhaustiveGraphClustering(BaseEstimator):
    """Estimator wrapper around :func:`exhaustive_cluster`.

    ``fit`` takes an :class:`AdjacencyGraph` and exposes the coalesced
    interval list as ``intervals_``.
    """

    def __init__(self, initial_range_width=50.0, growth_factor=1.5, workers=12,
                 threshold_rule="max"):
        self.initial_range_width = initial_range_width
        self.growth_factor = growth_factor
        self.workers = workers
        self.threshold_rule = threshold_rule

    def fit(self, X, y=None):
        config = SweepConfig(
            initial_range_width=self.initial_range_width,
            growth_factor=self.growth_factor,
            workers=self.workers,
            threshold_rule=self.threshold_rule,
        )
        self.intervals_ = exhaustive_cluster(X, config)
        self.n_clusterings_ = len(self.intervals_)
        return self
