"""Partitions of vertex parts and refinement algebra.

Conventions used throughout the package:

* block labels are contiguous integers starting at 0;
* label 0 is the designated exceptional block whenever
  ``has_exceptional`` is set (it may be empty, and it is materialized
  rather than implicit so that audits can include or exclude it
  uniformly);
* an ``equitable`` partition has all non-exceptional blocks of equal
  size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hypercore import VertexSet, _frozen


class PartPartition:
    """Partition of one vertex part into labeled blocks."""

    __slots__ = ("part", "labels", "n_blocks", "has_exceptional", "equitable")

    def __init__(self, labels, part=None, n_blocks=None, has_exceptional=False,
                 equitable=False):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be a flat vector")
        if labels.size == 0:
            raise ValueError("cannot partition an empty part")
        if labels.min() < 0:
            raise ValueError("labels must be nonnegative")
        inferred = int(labels.max()) + 1
        if n_blocks is None:
            n_blocks = inferred
        if n_blocks < inferred:
            raise ValueError(f"n_blocks={n_blocks} below max label {inferred - 1}")
        self.part = part
        self.labels = _frozen(labels)
        self.n_blocks = int(n_blocks)
        self.has_exceptional = bool(has_exceptional)
        self.equitable = bool(equitable)
        if self.equitable:
            sizes = self.sizes()
            body = sizes[1:] if self.has_exceptional else sizes
            if body.size and not np.all(body == body[0]):
                raise ValueError("equitable flag set but block sizes differ")

    @classmethod
    def trivial(cls, n, part=None):
        """Single block covering the whole part."""
        return cls(np.zeros(n, dtype=np.int64), part=part, equitable=True)

    @classmethod
    def singletons(cls, n, part=None):
        return cls(np.arange(n, dtype=np.int64), part=part, equitable=True)

    @classmethod
    def from_blocks(cls, blocks, n, part=None, has_exceptional=False):
        """Build from explicit index arrays, one per label in order."""
        labels = np.full(n, -1, dtype=np.int64)
        for b, idx in enumerate(blocks):
            idx = np.asarray(idx, dtype=np.int64)
            if idx.size and labels[idx].max() >= 0:
                raise ValueError("blocks overlap")
            labels[idx] = b
        if (labels < 0).any():
            raise ValueError("blocks do not cover the part")
        return cls(labels, part=part, n_blocks=len(blocks),
                   has_exceptional=has_exceptional)

    @classmethod
    def intervals(cls, n, n_blocks, part=None):
        """``n_blocks`` consecutive equal intervals; requires divisibility."""
        if n % n_blocks != 0:
            raise ValueError(f"{n_blocks} equal intervals do not divide n={n}")
        width = n // n_blocks
        labels = np.repeat(np.arange(n_blocks, dtype=np.int64), width)
        return cls(labels, part=part, n_blocks=n_blocks, equitable=True)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_blocks)

    def block_indices(self, b) -> np.ndarray:
        return np.flatnonzero(self.labels == b)

    def block_mask(self, b) -> np.ndarray:
        return self.labels == b

    def block_set(self, b) -> VertexSet:
        return VertexSet.from_bool(self.labels == b, part=self.part)

    def block_of(self, v) -> int:
        return int(self.labels[v])

    def body_blocks(self):
        """Labels of the non-exceptional blocks."""
        start = 1 if self.has_exceptional else 0
        return range(start, self.n_blocks)

    def n_body_blocks(self) -> int:
        return self.n_blocks - (1 if self.has_exceptional else 0)

    def exceptional_size(self) -> int:
        if not self.has_exceptional:
            return 0
        return int(np.count_nonzero(self.labels == 0))

    def __eq__(self, other):
        if not isinstance(other, PartPartition):
            return NotImplemented
        return (
            self.part == other.part
            and self.n_blocks == other.n_blocks
            and self.has_exceptional == other.has_exceptional
            and bool(np.array_equal(self.labels, other.labels))
        )

    def __hash__(self):
        return hash((self.part, self.n_blocks, self.labels.tobytes()))

    def __repr__(self):
        tag = ", exceptional" if self.has_exceptional else ""
        return f"PartPartition(n={self.n}, blocks={self.n_blocks}{tag})"


class LayeredPartition:
    """One ``PartPartition`` per part of a k-partite graph."""

    __slots__ = ("parts",)

    def __init__(self, parts):
        parts = tuple(parts)
        if not parts:
            raise ValueError("need at least one part")
        for i, p in enumerate(parts):
            if p.part is not None and p.part != i:
                raise ValueError(f"partition at position {i} labeled part {p.part}")
        self.parts = parts

    @property
    def k(self) -> int:
        return len(self.parts)

    def __getitem__(self, i) -> PartPartition:
        return self.parts[i]

    def __iter__(self):
        return iter(self.parts)

    def block_counts(self):
        return tuple(p.n_blocks for p in self.parts)

    def __repr__(self):
        return f"LayeredPartition(blocks={self.block_counts()})"


@dataclass(frozen=True)
class RefinementReport:
    """Outcome of a ``beta_refines`` check.

    ``parents[s]`` is the coarse block holding at least a ``1 - beta``
    fraction of fine block ``s`` (unique since ``beta < 1/2``), or -1
    when no such block exists. Empty fine blocks are excluded from the
    verdict; their parent is recorded as -1 as well.
    """

    beta: float
    parents: np.ndarray
    matched: np.ndarray
    considered: np.ndarray
    unmatched_fraction: float
    refines: bool

    def unmatched_blocks(self) -> np.ndarray:
        return np.flatnonzero(self.considered & ~self.matched)


def common_refinement(n: int, sets, part=None) -> PartPartition:
    """Venn-diagram atoms of the given subsets of ``range(n)``.

    Two vertices share an atom exactly when they agree on membership in
    every input set, so the result has at most ``2**len(sets)`` blocks
    and refines each input set's two-block partition. Atom labels
    follow the lexicographic order of membership signatures, which
    makes the labeling deterministic.
    """
    table = np.zeros((n, max(1, len(sets))), dtype=bool)
    for j, s in enumerate(sets):
        if isinstance(s, VertexSet):
            if s.n != n:
                raise ValueError(f"set {j} has length {s.n}, expected {n}")
            table[:, j] = s.to_bool()
        else:
            col = np.asarray(s, dtype=bool)
            if col.shape != (n,):
                raise ValueError(f"set {j} has shape {col.shape}, expected ({n},)")
            table[:, j] = col
    _, labels = np.unique(table, axis=0, return_inverse=True)
    return PartPartition(labels.astype(np.int64), part=part)


def equalize(p: PartPartition, m: int) -> PartPartition:
    """Equitable refinement with blocks of size exactly ``m``.

    Every input block is chopped into consecutive chunks of ``m``
    vertices (in index order); chunk leftovers are pooled into the
    exceptional block, which is then itself split into ``m``-blocks
    with at most one final remainder. The remainder stays as the
    (possibly empty) exceptional block 0, so no vertex is dropped and
    divisibility is never assumed.
    """
    m = int(m)
    if m < 1:
        raise ValueError(f"block size m={m} must be positive")
    if m > p.n:
        raise ValueError(f"block size m={m} exceeds part size {p.n}")
    pool = []
    chunks = []
    for b in range(p.n_blocks):
        idx = p.block_indices(b)
        if b == 0 and p.has_exceptional:
            pool.append(idx)
            continue
        n_full = idx.size // m
        for c in range(n_full):
            chunks.append(idx[c * m:(c + 1) * m])
        if idx.size % m:
            pool.append(idx[n_full * m:])
    pooled = np.concatenate(pool) if pool else np.zeros(0, dtype=np.int64)
    n_full = pooled.size // m
    for c in range(n_full):
        chunks.append(pooled[c * m:(c + 1) * m])
    remainder = pooled[n_full * m:]
    labels = np.zeros(p.n, dtype=np.int64)
    for c, idx in enumerate(chunks):
        labels[idx] = c + 1
    labels[remainder] = 0
    return PartPartition(labels, part=p.part, n_blocks=len(chunks) + 1,
                         has_exceptional=True, equitable=True)


def beta_refines(fine: PartPartition, coarse: PartPartition, beta: float) -> RefinementReport:
    """Check whether ``fine`` beta-refines ``coarse``.

    A fine block is matched when some coarse block contains at least a
    ``1 - beta`` fraction of it; the verdict holds when the unmatched
    fraction of (nonempty) fine blocks is at most ``beta``. Requires
    ``beta < 1/2``, which is what makes the matched parent unique.
    """
    beta = float(beta)
    if not 0.0 <= beta < 0.5:
        raise ValueError(f"beta={beta} rejected; the parent is only unique for beta < 1/2")
    if fine.n != coarse.n:
        raise ValueError("partitions cover different universes")
    overlap = np.bincount(
        fine.labels * coarse.n_blocks + coarse.labels,
        minlength=fine.n_blocks * coarse.n_blocks,
    ).reshape(fine.n_blocks, coarse.n_blocks)
    sizes = overlap.sum(axis=1)
    considered = sizes > 0
    best = overlap.argmax(axis=1)
    best_mass = overlap[np.arange(fine.n_blocks), best]
    matched = considered & (best_mass >= (1.0 - beta) * sizes)
    parents = np.where(matched, best, -1).astype(np.int64)
    n_considered = int(considered.sum())
    n_unmatched = int((considered & ~matched).sum())
    frac = n_unmatched / n_considered if n_considered else 0.0
    return RefinementReport(
        beta=beta,
        parents=_frozen(parents),
        matched=_frozen(matched),
        considered=_frozen(considered),
        unmatched_fraction=float(frac),
        refines=bool(frac <= beta),
    )
