"""Core data model for k-partite hypergraphs and their links.

Types
-----
``VertexSet``
    Immutable subset of one part, stored as a packed bitmask.
``BipartiteGraph``
    Adjacency bit-rows per left vertex.
``KPartiteHypergraph``
    k-partite k-uniform edge relation, bit-packed along the last part's
    axis so that fiber neighborhoods and their symmetric differences are
    word-parallel popcounts.
``WeightedTripartite``
    Dense [0, 1] weight tensor over three parts.

All objects freeze their arrays after construction; the kernels below
(`density`, `link`, `neighborhood`, `partite_cover`) are pure functions
and safe to share across threads.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from . import bitops
from .errors import EmptySubsetError, PinError


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


class VertexSet:
    """Subset of one vertex part.

    ``part`` is the 0-based part index, or None when the set lives on an
    unanchored side (e.g. one side of a standalone bipartite graph).
    The mask length always matches the part size ``n``; operations
    between sets require matching ``(part, n)``.
    """

    __slots__ = ("part", "n", "words", "_size")

    def __init__(self, part, n, words):
        self.part = part
        self.n = int(n)
        words = np.asarray(words, dtype=np.uint64)
        if words.shape != (bitops.n_words(self.n),):
            raise ValueError(f"mask shape {words.shape} does not fit n={self.n}")
        self.words = _frozen(words)
        self._size = None

    @classmethod
    def from_bool(cls, mask, part=None):
        mask = np.asarray(mask, dtype=bool)
        return cls(part, mask.shape[0], bitops.pack(mask))

    @classmethod
    def from_indices(cls, indices, n, part=None):
        return cls(part, n, bitops.from_indices(indices, n))

    @classmethod
    def full(cls, n, part=None):
        return cls.from_bool(np.ones(n, dtype=bool), part=part)

    @classmethod
    def empty(cls, n, part=None):
        return cls.from_bool(np.zeros(n, dtype=bool), part=part)

    @property
    def size(self) -> int:
        if self._size is None:
            self._size = int(bitops.popcount(self.words))
        return self._size

    def __len__(self) -> int:
        return self.size

    def to_bool(self) -> np.ndarray:
        return bitops.unpack(self.words, self.n)

    def indices(self) -> np.ndarray:
        return bitops.to_indices(self.words, self.n)

    def contains(self, v: int) -> bool:
        return bool(bitops.extract_bit(self.words, int(v)))

    def complement(self) -> "VertexSet":
        return VertexSet.from_bool(~self.to_bool(), part=self.part)

    def _check_compatible(self, other):
        if not isinstance(other, VertexSet):
            raise TypeError("expected a VertexSet")
        if self.n != other.n or self.part != other.part:
            raise ValueError("vertex sets live on different parts")

    def __and__(self, other):
        self._check_compatible(other)
        return VertexSet(self.part, self.n, self.words & other.words)

    def __or__(self, other):
        self._check_compatible(other)
        return VertexSet(self.part, self.n, self.words | other.words)

    def __xor__(self, other):
        self._check_compatible(other)
        return VertexSet(self.part, self.n, self.words ^ other.words)

    def symdiff_size(self, other) -> int:
        """|self XOR other| as a single popcount pass."""
        self._check_compatible(other)
        return int(bitops.popcount(self.words ^ other.words))

    def __eq__(self, other):
        if not isinstance(other, VertexSet):
            return NotImplemented
        return (
            self.part == other.part
            and self.n == other.n
            and bool(np.array_equal(self.words, other.words))
        )

    def __hash__(self):
        return hash((self.part, self.n, self.words.tobytes()))

    def __repr__(self):
        return f"VertexSet(part={self.part}, n={self.n}, size={self.size})"


class BipartiteGraph:
    """Bipartite graph with packed adjacency rows per left vertex."""

    __slots__ = ("n_left", "n_right", "rows")

    def __init__(self, n_left, n_right, rows):
        self.n_left = int(n_left)
        self.n_right = int(n_right)
        rows = np.asarray(rows, dtype=np.uint64)
        expected = (self.n_left, bitops.n_words(self.n_right))
        if rows.shape != expected:
            raise ValueError(f"row array shape {rows.shape}, expected {expected}")
        self.rows = _frozen(rows)

    @classmethod
    def from_dense(cls, adj):
        adj = np.asarray(adj, dtype=bool)
        if adj.ndim != 2:
            raise ValueError("adjacency must be 2-d")
        return cls(adj.shape[0], adj.shape[1], bitops.pack(adj))

    @classmethod
    def from_edges(cls, n_left, n_right, edges):
        adj = np.zeros((n_left, n_right), dtype=bool)
        for x, y in edges:
            adj[x, y] = True
        return cls.from_dense(adj)

    @classmethod
    def complete(cls, n_left, n_right):
        return cls.from_dense(np.ones((n_left, n_right), dtype=bool))

    @classmethod
    def empty(cls, n_left, n_right):
        return cls.from_dense(np.zeros((n_left, n_right), dtype=bool))

    def to_dense(self) -> np.ndarray:
        return bitops.unpack(self.rows, self.n_right)

    def has_edge(self, x, y) -> bool:
        return bool(bitops.extract_bit(self.rows[x], int(y)))

    @property
    def edge_count(self) -> int:
        return int(bitops.popcount(self.rows))

    def degrees(self) -> np.ndarray:
        return bitops.popcount(self.rows, axis=-1)

    def degree(self, x) -> int:
        return int(bitops.popcount(self.rows[x]))

    def neighborhood(self, x) -> VertexSet:
        """Right-side neighborhood of left vertex ``x`` as a bitmask."""
        return VertexSet(1, self.n_right, self.rows[x].copy())

    def transpose(self) -> "BipartiteGraph":
        return BipartiteGraph.from_dense(self.to_dense().T)

    def density(self, left: VertexSet | None = None, right: VertexSet | None = None) -> float:
        """Edge density of the induced pair (full sides by default)."""
        if left is None:
            idx = np.arange(self.n_left)
            n_l = self.n_left
        else:
            if left.size == 0:
                raise EmptySubsetError(0)
            idx = left.indices()
            n_l = left.size
        if right is None:
            words = self.rows[idx]
            n_r = self.n_right
        else:
            if right.size == 0:
                raise EmptySubsetError(1)
            words = self.rows[idx] & right.words
            n_r = right.size
        edges = int(bitops.popcount(words))
        return edges / (n_l * n_r)

    def weights_matrix(self) -> np.ndarray:
        return self.to_dense().astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (
            self.n_left == other.n_left
            and self.n_right == other.n_right
            and bool(np.array_equal(self.rows, other.rows))
        )

    def __hash__(self):
        return hash((self.n_left, self.n_right, self.rows.tobytes()))

    def __repr__(self):
        return f"BipartiteGraph({self.n_left}x{self.n_right}, edges={self.edge_count})"


class WeightedBipartite:
    """Bipartite graph with real weights in [0, 1], used for link slices."""

    __slots__ = ("n_left", "n_right", "weights")

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 2:
            raise ValueError("weight matrix must be 2-d")
        if weights.size and (weights.min() < 0.0 or weights.max() > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        self.n_left, self.n_right = weights.shape
        self.weights = _frozen(weights)

    def density(self, left: VertexSet | None = None, right: VertexSet | None = None) -> float:
        li = np.arange(self.n_left) if left is None else left.indices()
        ri = np.arange(self.n_right) if right is None else right.indices()
        if li.size == 0:
            raise EmptySubsetError(0)
        if ri.size == 0:
            raise EmptySubsetError(1)
        return float(self.weights[np.ix_(li, ri)].mean())

    def weights_matrix(self) -> np.ndarray:
        return self.weights

    def __repr__(self):
        return f"WeightedBipartite({self.n_left}x{self.n_right})"


class KPartiteHypergraph:
    """k-partite k-uniform hypergraph on parts of fixed sizes.

    Edges are subsets picking exactly one vertex per part. Storage is a
    uint64 array of shape ``part_sizes[:-1] + (n_words,)``: bit ``c`` of
    fiber ``e`` says whether ``e + (c,)`` is an edge. Neighborhoods in
    the last part are therefore single packed rows and the symmetric
    difference of two neighborhoods is one XOR-popcount pass.
    """

    __slots__ = ("k", "part_sizes", "words")

    def __init__(self, part_sizes, words):
        self.part_sizes = tuple(int(s) for s in part_sizes)
        self.k = len(self.part_sizes)
        if self.k < 2:
            raise ValueError("need at least two parts")
        if any(s <= 0 for s in self.part_sizes):
            raise ValueError(f"part sizes must be positive: {self.part_sizes}")
        words = np.asarray(words, dtype=np.uint64)
        expected = self.part_sizes[:-1] + (bitops.n_words(self.part_sizes[-1]),)
        if words.shape != expected:
            raise ValueError(f"word array shape {words.shape}, expected {expected}")
        self.words = _frozen(words)

    @classmethod
    def from_dense(cls, tensor):
        tensor = np.asarray(tensor, dtype=bool)
        return cls(tensor.shape, bitops.pack(tensor))

    @classmethod
    def from_edges(cls, part_sizes, edges):
        tensor = np.zeros(tuple(part_sizes), dtype=bool)
        for e in edges:
            tensor[tuple(e)] = True
        return cls.from_dense(tensor)

    @classmethod
    def empty(cls, part_sizes):
        return cls.from_dense(np.zeros(tuple(part_sizes), dtype=bool))

    @classmethod
    def complete(cls, part_sizes):
        return cls.from_dense(np.ones(tuple(part_sizes), dtype=bool))

    def to_dense(self) -> np.ndarray:
        return bitops.unpack(self.words, self.part_sizes[-1])

    def has_edge(self, e) -> bool:
        e = tuple(int(v) for v in e)
        if len(e) != self.k:
            raise ValueError(f"edge arity {len(e)}, expected {self.k}")
        return bool(bitops.extract_bit(self.words[e[:-1]], e[-1]))

    @property
    def edge_count(self) -> int:
        return int(bitops.popcount(self.words))

    def fiber_rows(self) -> np.ndarray:
        """All last-part neighborhoods as a flat (N, n_words) view."""
        return self.words.reshape(-1, self.words.shape[-1])

    def edges(self):
        """Iterate edges as k-tuples in row-major order."""
        dense = self.to_dense()
        for idx in zip(*np.nonzero(dense)):
            yield tuple(int(v) for v in idx)

    def permute(self, order) -> "KPartiteHypergraph":
        """Reindex parts so that ``order[i]`` becomes part ``i``."""
        order = tuple(int(i) for i in order)
        if sorted(order) != list(range(self.k)):
            raise ValueError(f"{order} is not a permutation of parts")
        if order == tuple(range(self.k)):
            return self
        return KPartiteHypergraph.from_dense(np.transpose(self.to_dense(), order))

    def __eq__(self, other):
        if not isinstance(other, KPartiteHypergraph):
            return NotImplemented
        return self.part_sizes == other.part_sizes and bool(
            np.array_equal(self.words, other.words)
        )

    def __hash__(self):
        return hash((self.part_sizes, self.words.tobytes()))

    def __repr__(self):
        sizes = "x".join(str(s) for s in self.part_sizes)
        return f"KPartiteHypergraph({sizes}, edges={self.edge_count})"


class WeightedTripartite:
    """Tripartite edge relation with weights in [0, 1] (missing = 0)."""

    __slots__ = ("part_sizes", "weights")

    def __init__(self, weights):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 3:
            raise ValueError("weight tensor must be 3-d")
        if weights.size and (weights.min() < 0.0 or weights.max() > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        self.part_sizes = weights.shape
        self.weights = _frozen(weights)

    @property
    def k(self) -> int:
        return 3

    def weight(self, e) -> float:
        return float(self.weights[tuple(int(v) for v in e)])

    def link(self, part, v) -> WeightedBipartite:
        """Weighted bipartite link of vertex ``v`` of the given part.

        Sides keep the natural order of the two remaining parts.
        """
        v = int(v)
        if part == 0:
            return WeightedBipartite(self.weights[v])
        if part == 1:
            return WeightedBipartite(self.weights[:, v, :])
        if part == 2:
            return WeightedBipartite(self.weights[:, :, v])
        raise PinError(f"part {part} out of range for a tripartite graph")

    def __repr__(self):
        sizes = "x".join(str(s) for s in self.part_sizes)
        return f"WeightedTripartite({sizes})"


def _validate_subsets(h, subsets):
    if len(subsets) != h.k:
        raise ValueError(f"expected {h.k} subsets, got {len(subsets)}")
    for i, s in enumerate(subsets):
        if s.n != h.part_sizes[i]:
            raise ValueError(
                f"subset for part {i} has length {s.n}, part has {h.part_sizes[i]}"
            )
        if s.part is not None and s.part != i:
            raise ValueError(f"subset at position {i} is labeled part {s.part}")
        if s.size == 0:
            raise EmptySubsetError(i)


def density(h, subsets) -> float:
    """Edge density (or mean weight) of the sub-box picked by ``subsets``.

    ``subsets`` holds one nonempty ``VertexSet`` per part, in part
    order. For unweighted hypergraphs this counts edges inside the box
    divided by the number of cells; for weighted tripartite input it is
    the mean weight over the box.
    """
    subsets = tuple(subsets)
    _validate_subsets(h, subsets)
    if isinstance(h, WeightedTripartite):
        idx = [s.indices() for s in subsets]
        return float(h.weights[np.ix_(*idx)].mean())
    idx = [s.indices() for s in subsets[:-1]]
    target = subsets[-1]
    sub = h.words[np.ix_(*idx)] if idx else h.words
    edges = int(bitops.popcount(sub & target.words))
    cells = math.prod(s.size for s in subsets)
    return edges / cells


def neighborhood(h: KPartiteHypergraph, e) -> VertexSet:
    """Last-part neighborhood of a tuple spanning parts 0..k-2."""
    e = tuple(int(v) for v in e)
    if len(e) != h.k - 1:
        raise ValueError(f"tuple arity {len(e)}, expected {h.k - 1}")
    for i, v in enumerate(e):
        if not 0 <= v < h.part_sizes[i]:
            raise PinError(f"vertex {v} out of range for part {i}")
    return VertexSet(h.k - 1, h.part_sizes[-1], h.words[e].copy())


def link(h: KPartiteHypergraph, pins) -> BipartiteGraph:
    """Bipartite link of ``k - 2`` pinned vertices.

    ``pins`` is a sequence of ``(part, vertex)`` pairs in distinct
    parts. The result connects the two unpinned parts in part order;
    an edge of the link is a pair completing the pins to an edge of
    ``h``.
    """
    pins = [(int(p), int(v)) for p, v in pins]
    if len(pins) != h.k - 2:
        raise PinError(f"expected {h.k - 2} pins, got {len(pins)}")
    parts = [p for p, _ in pins]
    if len(set(parts)) != len(parts):
        raise PinError(f"pins repeat a part: {sorted(parts)}")
    for p, v in pins:
        if not 0 <= p < h.k:
            raise PinError(f"pin part {p} out of range")
        if not 0 <= v < h.part_sizes[p]:
            raise PinError(f"pin vertex {v} out of range for part {p}")
    free = sorted(set(range(h.k)) - set(parts))
    left, right = free
    pin_of = dict(pins)
    if right == h.k - 1:
        indexer = tuple(
            slice(None) if axis == left else pin_of[axis] for axis in range(h.k - 1)
        )
        rows = h.words[indexer]
        return BipartiteGraph(h.part_sizes[left], h.part_sizes[right], rows.copy())
    indexer = tuple(
        slice(None) if axis in (left, right) else pin_of[axis]
        for axis in range(h.k - 1)
    )
    plane = bitops.extract_bit(h.words[indexer], pin_of[h.k - 1])
    return BipartiteGraph.from_dense(plane)


def partite_cover(n_vertices: int, edges, k: int | None = None) -> KPartiteHypergraph:
    """k-partite cover of an ordinary k-uniform hypergraph.

    Takes a k-graph on vertices ``range(n_vertices)`` given as an edge
    set of k-element subsets, and returns the k-partite graph on k
    copies of the vertex set whose edges are all transversal orderings
    of the original edges. Each input edge contributes exactly k!
    partite edges.
    """
    edges = [tuple(sorted(int(v) for v in e)) for e in edges]
    if k is None:
        if not edges:
            raise ValueError("cannot infer k from an empty edge set")
        k = len(edges[0])
    for e in edges:
        if len(e) != k or len(set(e)) != k:
            raise ValueError(f"edge {e} is not a {k}-element subset")
        if e[0] < 0 or e[-1] >= n_vertices:
            raise ValueError(f"edge {e} out of range for n={n_vertices}")
    tensor = np.zeros((n_vertices,) * k, dtype=bool)
    for e in set(edges):
        for perm in itertools.permutations(e):
            tensor[perm] = True
    return KPartiteHypergraph.from_dense(tensor)
