"""Multi-instance weighted directed graphs and shortest-path engines.

A multi-instance graph is a fixed node set shared by one or more edge-weighted
directed instances.  Instances either come straight from an edge list or are
sampled from a probabilistic edge-length model over a common topology.  All
graph values are immutable once built and safe to share across threads; the
pausable `DijkstraCursor` is the only mutable search state and is single-owner.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

INF = math.inf


class GraphFormatError(ValueError):
    """Malformed edge-list input."""


@dataclass(frozen=True)
class EdgeLengthModel:
    """Random edge-length assignment used when sampling instances.

    kind is one of "exponential", "weibull", "unit", "file".  Exponential
    lengths are -mean*ln(x) with x uniform on (0, 1].  Weibull draws a
    per-edge scale and shape uniformly from (0, high] once, then samples one
    length per (edge, instance).  "unit" forces every length to 1; "file"
    keeps the base lengths.  Sampling is a pure function of (base, model,
    seed): lengths come from a counter-based generator keyed on the seed, so
    the draw for an (edge, instance) slot does not depend on evaluation order.
    """

    kind: str
    mean: float = 1.0
    high: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("exponential", "weibull", "unit", "file"):
            raise ValueError(f"unknown edge-length model kind: {self.kind!r}")
        if self.kind == "exponential" and not self.mean > 0:
            raise ValueError("exponential mean must be positive")
        if self.kind == "weibull" and not self.high > 0:
            raise ValueError("weibull parameter range must be positive")

    @classmethod
    def exponential(cls, mean: float = 1.0, seed: int = 0) -> "EdgeLengthModel":
        return cls("exponential", mean=mean, seed=seed)

    @classmethod
    def weibull(cls, high: float = 10.0, seed: int = 0) -> "EdgeLengthModel":
        return cls("weibull", high=high, seed=seed)

    @classmethod
    def unit(cls) -> "EdgeLengthModel":
        return cls("unit")

    @classmethod
    def file_given(cls) -> "EdgeLengthModel":
        return cls("file")

    def sample(self, base_weights: np.ndarray, ell: int) -> np.ndarray:
        """Draw an (ell, m) length matrix for a topology with m edges."""
        m = base_weights.shape[0]
        if self.kind == "unit":
            return np.ones((ell, m))
        if self.kind == "file":
            return np.tile(base_weights, (ell, 1))
        rng = np.random.Generator(np.random.Philox(key=self.seed))
        if self.kind == "exponential":
            u = 1.0 - rng.random((ell, m))  # uniform on (0, 1]
            return -self.mean * np.log(u)
        # weibull: per-edge scale/shape in (0, high], then per-slot draws
        lam = self.high * (1.0 - rng.random(m))
        beta = self.high * (1.0 - rng.random(m))
        u = 1.0 - rng.random((ell, m))
        return lam * (-np.log(u)) ** (1.0 / beta)


class Instance:
    """One weighted directed instance over nodes [0, n)."""

    __slots__ = ("n", "tails", "heads", "weights", "adj", "_radj")

    def __init__(self, n: int, tails: np.ndarray, heads: np.ndarray, weights: np.ndarray):
        if len(weights) and weights.min() <= 0:
            raise ValueError("edge lengths must be positive")
        self.n = n
        self.tails = tails
        self.heads = heads
        self.weights = weights
        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for t, h, w in zip(tails.tolist(), heads.tolist(), weights.tolist()):
            adj[t].append((h, w))
        self.adj = adj
        self._radj = None

    @property
    def radj(self) -> list[list[tuple[int, float]]]:
        """Transpose adjacency, built on first use."""
        if self._radj is None:
            radj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
            for t, h, w in zip(self.tails.tolist(), self.heads.tolist(), self.weights.tolist()):
                radj[h].append((t, w))
            self._radj = radj
        return self._radj


class MultiInstanceGraph:
    """Shared node set with ell directed weighted edge sets."""

    def __init__(self, n: int, instances: Sequence[Instance], labels: Sequence[str] | None = None):
        if not instances:
            raise ValueError("need at least one instance")
        self.n = n
        self.instances = list(instances)
        self.labels = list(labels) if labels is not None else [str(i) for i in range(n)]
        self._label_index = {lab: i for i, lab in enumerate(self.labels)}

    @property
    def ell(self) -> int:
        return len(self.instances)

    def node_of_label(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise ValueError(f"unknown node label: {label!r}") from None

    @classmethod
    def from_arrays(
        cls,
        n: int,
        tails: Sequence[int],
        heads: Sequence[int],
        weights: np.ndarray | Sequence[Sequence[float]] | None = None,
        labels: Sequence[str] | None = None,
    ) -> "MultiInstanceGraph":
        """Build from parallel edge arrays; weights is (ell, m) or None for unit."""
        tails = np.asarray(tails, dtype=np.int64)
        heads = np.asarray(heads, dtype=np.int64)
        if weights is None:
            weights = np.ones((1, len(tails)))
        weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
        instances = [Instance(n, tails, heads, w) for w in weights]
        return cls(n, instances, labels)


def load_edge_list(path: str, weighted: bool = False) -> MultiInstanceGraph:
    """Read a whitespace-separated "tail head [length]" file into a one-instance graph.

    Node ids are remapped to dense [0, n) in order of first appearance; the
    original tokens are kept as labels.  Self-loops are dropped and parallel
    edges are collapsed to the minimum length (convention; absent edges mean
    infinite distance either way).  Unweighted edges get length 1.
    """
    labels: list[str] = []
    index: dict[str, int] = {}

    def node(tok: str) -> int:
        if tok not in index:
            index[tok] = len(labels)
            labels.append(tok)
        return index[tok]

    best: dict[tuple[int, int], float] = {}
    order: list[tuple[int, int]] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            want = 3 if weighted else 2
            if len(parts) != want:
                raise GraphFormatError(f"{path}:{lineno}: expected {want} fields, got {len(parts)}")
            t, h = node(parts[0]), node(parts[1])
            if weighted:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise GraphFormatError(f"{path}:{lineno}: bad length {parts[2]!r}") from None
            else:
                w = 1.0
            if not w > 0:
                raise ValueError(f"{path}:{lineno}: edge length must be positive, got {w}")
            if t == h:
                continue
            key = (t, h)
            if key not in best:
                best[key] = w
                order.append(key)
            elif w < best[key]:
                best[key] = w
    tails = [t for t, _ in order]
    heads = [h for _, h in order]
    weights = np.array([[best[k] for k in order]], dtype=np.float64)
    return MultiInstanceGraph.from_arrays(len(labels), tails, heads, weights, labels)


def sample_instances(base: MultiInstanceGraph, model: EdgeLengthModel, ell: int) -> MultiInstanceGraph:
    """Sample ell instances with the base topology and model-drawn lengths."""
    if base.ell != 1:
        raise ValueError("instance sampling starts from a single-instance graph")
    if ell < 1:
        raise ValueError("ell must be at least 1")
    inst = base.instances[0]
    weights = model.sample(inst.weights, ell)
    return MultiInstanceGraph.from_arrays(base.n, inst.tails, inst.heads, weights, base.labels)


def save_npz(g: MultiInstanceGraph, path: str) -> None:
    """Binary cache of a graph; round-trips losslessly."""
    inst = g.instances[0]
    weights = np.stack([i.weights for i in g.instances]) if len(inst.weights) else np.zeros((g.ell, 0))
    np.savez(
        path,
        n=np.int64(g.n),
        tails=inst.tails,
        heads=inst.heads,
        weights=weights,
        labels=np.array(g.labels, dtype="U"),
    )


def load_npz(path: str) -> MultiInstanceGraph:
    data = np.load(path)
    return MultiInstanceGraph.from_arrays(
        int(data["n"]), data["tails"], data["heads"], data["weights"], [str(x) for x in data["labels"]]
    )


def forward_dijkstra(
    g: MultiInstanceGraph,
    instance: int,
    src: int,
    prune: Callable[[int, float], bool] | None = None,
) -> Iterator[tuple[int, float]]:
    """Stream (node, distance) in non-decreasing distance order from src.

    A node at which prune returns true is still yielded but its out-edges are
    not relaxed.
    """
    if not (0 <= src < g.n):
        raise ValueError(f"source {src} out of range")
    return _forward_iter(g.instances[instance].adj, src, prune)


def _forward_iter(adj, src, prune):
    dist: dict[int, float] = {}
    heap = [(0.0, src)]
    push, pop = heapq.heappush, heapq.heappop
    while heap:
        d, u = pop(heap)
        if u in dist:
            continue
        dist[u] = d
        yield u, d
        if prune is not None and prune(u, d):
            continue
        for v, w in adj[u]:
            if v not in dist:
                push(heap, (d + w, v))


class DijkstraCursor:
    """Pausable reverse Dijkstra from one node-instance pair.

    Runs on the transpose of the pair's instance, so settled distances are
    distances *to* the source in the original graph.  `mu` is the smallest
    unsettled tentative distance (0 initially, inf once exhausted); resuming
    continues exactly where the previous resume paused.
    """

    __slots__ = ("source", "_radj", "_dist", "_heap")

    def __init__(self, g: MultiInstanceGraph, instance: int, source: int):
        if not (0 <= source < g.n):
            raise ValueError(f"source {source} out of range")
        self.source = (source, instance)
        self._radj = g.instances[instance].radj
        self._dist: dict[int, float] = {}
        self._heap: list[tuple[float, int]] = [(0.0, source)]

    def peek(self) -> float | None:
        """Next settle distance, or None when the search is exhausted."""
        heap, dist = self._heap, self._dist
        while heap and heap[0][1] in dist:
            heapq.heappop(heap)
        return heap[0][0] if heap else None

    @property
    def mu(self) -> float:
        d = self.peek()
        return INF if d is None else d

    @property
    def exhausted(self) -> bool:
        return self.peek() is None

    def settle_next(self) -> tuple[int, float]:
        """Settle and return the next node; relaxes its transpose out-edges."""
        d = self.peek()
        if d is None:
            raise RuntimeError("cursor exhausted")
        _, u = heapq.heappop(self._heap)
        dist = self._dist
        dist[u] = d
        push = heapq.heappush
        for v, w in self._radj[u]:
            if v not in dist:
                push(self._heap, (d + w, v))
        return u, d

    def resume(self, stop: Callable[[float], bool] | None = None) -> Iterator[tuple[int, float]]:
        """Stream settles until stop(next distance) holds or the search ends."""
        if self.exhausted:
            raise RuntimeError("cannot resume a terminated cursor")
        return self._resume_iter(stop)

    def _resume_iter(self, stop):
        while True:
            d = self.peek()
            if d is None or (stop is not None and stop(d)):
                return
            yield self.settle_next()


def all_pairs_distances(g: MultiInstanceGraph, limit: float = INF) -> list[np.ndarray]:
    """Per-instance (n, n) distance matrices; entries beyond limit stay inf."""
    out = []
    n = g.n
    for inst in g.instances:
        adj = inst.adj
        mat = np.full((n, n), INF)
        for src in range(n):
            row = mat[src]
            dist: dict[int, float] = {}
            heap = [(0.0, src)]
            push, pop = heapq.heappush, heapq.heappop
            while heap:
                d, u = pop(heap)
                if u in dist:
                    continue
                if d > limit:
                    break
                dist[u] = d
                row[u] = d
                for v, w in adj[u]:
                    if v not in dist:
                        push(heap, (d + w, v))
        out.append(mat)
    return out
