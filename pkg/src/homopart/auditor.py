"""Verification side of the pipeline.

Everything here recomputes its verdicts from first principles: block
densities by direct summation, disagreement pairs by exact counting,
regularity witnesses by subset search, and VC dimension by shattering.
The audit functions accept weighted tensors as well; weighted verdicts
are flagged as the extension they are.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._parallel import ordered_map
from .hypercore import BipartiteGraph, KPartiteHypergraph, WeightedTripartite, link
from .partitions import LayeredPartition
from .rng import generator


def _as_tensor(h) -> tuple[np.ndarray, bool]:
    """Dense weight tensor plus a flag for genuinely weighted input."""
    if isinstance(h, KPartiteHypergraph):
        return h.to_dense().astype(np.float64), False
    if isinstance(h, WeightedTripartite):
        return np.asarray(h.weights, dtype=np.float64), True
    arr = np.asarray(h)
    if arr.dtype == bool:
        return arr.astype(np.float64), False
    return arr.astype(np.float64), True


@dataclass(frozen=True)
class HomogeneityReport:
    """Outcome of a block-tuple density audit.

    ``mass`` is the number of cells inside non-homogeneous block
    tuples and ``normalized_mass`` that count over all cells; the
    audit passes when the normalized mass is at most eps. ``rows``
    holds one (block labels, density, ok) triple per audited tuple.
    """

    kind: str
    eps: float
    passed: bool
    mass: int
    normalized_mass: float
    rows: tuple
    weighted: bool

    def failing(self):
        return tuple(r for r in self.rows if not r[2])


def homogeneity_audit(h, partition: LayeredPartition, eps: float,
                      kind: str = "block") -> HomogeneityReport:
    """Check every block tuple for density in [0, eps] or [1-eps, 1].

    Exceptional blocks take part like any other: they are blocks of
    the partition, and hiding them would understate the mass. Empty
    blocks contribute nothing.
    """
    tensor, weighted = _as_tensor(h)
    k = tensor.ndim
    parts = [partition[i] for i in range(k)]
    indices = [
        [p.block_indices(b) for b in range(p.n_blocks)] for p in parts
    ]
    rows = []
    mass = 0
    for labels in itertools.product(*[range(p.n_blocks) for p in parts]):
        cells = [indices[i][labels[i]] for i in range(k)]
        volume = math.prod(c.size for c in cells)
        if volume == 0:
            continue
        d = float(tensor[np.ix_(*cells)].mean())
        ok = d <= eps or d >= 1.0 - eps
        if not ok:
            mass += volume
        rows.append((labels, d, ok))
    total = tensor.size
    normalized = mass / total if total else 0.0
    return HomogeneityReport(
        kind=kind,
        eps=eps,
        passed=normalized <= eps + 1e-12,
        mass=mass,
        normalized_mass=normalized,
        rows=tuple(rows),
        weighted=weighted,
    )


def disagreement_threshold(eps: float, n: int, k: int, s: int) -> float:
    """Lower bound eps^2 (1-eps) n^(k+1) / s forced by a failed audit,
    where s is the number of blocks per part."""
    return eps**2 * (1.0 - eps) * float(n) ** (k + 1) / s


def disagreement_pairs(h, partition: LayeredPartition) -> tuple:
    """Exact per-coordinate counts of same-block disagreement pairs.

    The coordinate-i count is the number of pairs (e, e') with e an
    edge, e' a non-edge, agreeing outside coordinate i, and with their
    two part-i vertices in one block of the part-i partition. Within a
    fixed line segment that is (#edges) * (#non-edges).
    """
    tensor, _ = _as_tensor(h)
    if not ((tensor == 0) | (tensor == 1)).all():
        raise ValueError("disagreement pairs need a 0/1 tensor")
    k = tensor.ndim
    counts = []
    for i in range(k):
        moved = np.moveaxis(tensor, i, -1)
        p = partition[i]
        total = 0
        for b in range(p.n_blocks):
            seg = moved[..., p.block_indices(b)]
            ones = seg.sum(axis=-1)
            zeros = seg.shape[-1] - ones
            total += int((ones * zeros).sum())
        counts.append(total)
    return tuple(counts)


@dataclass(frozen=True)
class RegularityWitness:
    """Subsets certifying a density deviation, with both densities."""

    subsets: tuple
    sub_density: float
    base_density: float
    deviation: float
    exact: bool


def _prefix_extreme(per_vertex: np.ndarray, base: float, scale: float,
                    min_size: int = 1):
    """Best subset of one coordinate by sorted prefix scan.

    Among subsets of the scored vertices with at least ``min_size``
    elements, the deviation |sum(scores)/ (scale*j) - base| is
    maximized by a prefix of the score ranking, from one end or the
    other; returns (indices, sub_density, deviation).
    """
    order = np.argsort(per_vertex, kind="stable")
    best = None
    for direction in (order, order[::-1]):
        csum = np.cumsum(per_vertex[direction])
        for j in range(min_size, len(direction) + 1):
            d = csum[j - 1] / (scale * j)
            dev = abs(d - base)
            if best is None or dev > best[2] + 1e-15:
                best = (direction[:j], d, dev)
    return best


def weak_regularity_witness(
    h,
    blocks: tuple,
    eps: float,
    *,
    exact_bits: int = 16,
    draws: int = 2000,
    seed: int = 0,
) -> RegularityWitness | None:
    """Search for subsets of a block triple with density off by > eps.

    ``blocks`` is one index array per part. When the two smallest
    blocks fit in ``exact_bits`` bits together the search is exact:
    their subsets are enumerated and the third side is optimized by a
    prefix scan, which loses nothing. Otherwise ``draws`` random
    subset pairs are tried the same way. Returns None when no witness
    is found (a certificate of weak eps-regularity only in exact mode).
    """
    tensor, _ = _as_tensor(h)
    if tensor.ndim != 3:
        raise ValueError("weak regularity runs on tripartite input")
    blocks = tuple(np.asarray(b, dtype=np.int64) for b in blocks)
    sub = tensor[np.ix_(*blocks)]
    base = float(sub.mean())
    sizes = [b.size for b in blocks]
    order = np.argsort(sizes, kind="stable")
    a, b, c = order[0], order[1], order[2]
    exact = sizes[a] + sizes[b] <= exact_bits

    def candidates():
        if exact:
            for mask_a in range(1, 2 ** sizes[a]):
                ia = np.flatnonzero([(mask_a >> t) & 1 for t in range(sizes[a])])
                for mask_b in range(1, 2 ** sizes[b]):
                    ib = np.flatnonzero(
                        [(mask_b >> t) & 1 for t in range(sizes[b])]
                    )
                    yield ia, ib
        else:
            rng = generator(seed, "weak-witness")
            for _ in range(draws):
                ia = np.flatnonzero(rng.random(sizes[a]) < 0.5)
                ib = np.flatnonzero(rng.random(sizes[b]) < 0.5)
                if ia.size and ib.size:
                    yield ia, ib

    moved = np.moveaxis(sub, (a, b, c), (0, 1, 2))
    best = None
    for ia, ib in candidates():
        per_c = moved[np.ix_(ia, ib)].sum(axis=(0, 1))
        hit = _prefix_extreme(per_c, base, float(ia.size * ib.size))
        if hit and (best is None or hit[2] > best[0][2]):
            best = (hit, ia, ib)
    if best is None:
        return None
    (ic, d, dev), ia, ib = best
    if dev <= eps:
        return None
    picks = [None, None, None]
    picks[a], picks[b], picks[c] = ia, ib, np.sort(ic)
    subsets = tuple(blocks[i][picks[i]] for i in range(3))
    return RegularityWitness(
        subsets=subsets,
        sub_density=float(d),
        base_density=base,
        deviation=float(dev),
        exact=exact,
    )


def verify_witness(h, witness: RegularityWitness) -> float:
    """Recompute a witness deviation directly from the tensor."""
    tensor, _ = _as_tensor(h)
    sub = tensor[np.ix_(*witness.subsets)]
    return float(sub.mean())


def _mask_chunks(n: int, min_size: int, chunk_bits: int = 16):
    """All subsets of range(n) with at least min_size elements, as 0/1
    pattern matrices in mask order, chunked for memory."""
    total = 1 << n
    step = 1 << min(chunk_bits, n)
    bit = np.arange(n, dtype=np.uint64)
    for start in range(0, total, step):
        masks = np.arange(start, min(start + step, total), dtype=np.uint64)
        patterns = ((masks[:, None] >> bit[None, :]) & 1).astype(np.float64)
        keep = patterns.sum(axis=1) >= min_size
        if keep.any():
            yield patterns[keep]


def _bulk_prefix_extreme(scores: np.ndarray, base: float, scales: np.ndarray,
                         min_size: int):
    """Prefix-scan response for many candidate subsets at once.

    Row r of ``scores`` holds per-column sums for candidate r; the best
    deviation over prefixes (ascending or descending, length at least
    ``min_size``) of every row is found in one pass. Returns (row,
    column indices, deviation, density) or None.
    """
    c, n = scores.shape
    if c == 0 or n < min_size:
        return None
    order = np.argsort(scores, axis=1, kind="stable")
    js = np.arange(1, n + 1, dtype=np.float64)
    best = None
    for idx in (order, order[:, ::-1]):
        sorted_scores = np.take_along_axis(scores, idx, axis=1)
        dens = np.cumsum(sorted_scores, axis=1) / (scales[:, None] * js[None, :])
        dev = np.abs(dens - base)
        dev[:, : min_size - 1] = -1.0
        r, j = np.unravel_index(int(np.argmax(dev)), dev.shape)
        if best is None or dev[r, j] > best[2] + 1e-15:
            best = (
                int(r),
                np.sort(idx[r, : j + 1]),
                float(dev[r, j]),
                float(dens[r, j]),
            )
    return best


def bipartite_regularity_witness(
    g,
    delta: float,
    *,
    left=None,
    right=None,
    exact_bits: int = 22,
    draws: int = 4000,
    seed: int = 0,
) -> RegularityWitness | None:
    """Find X, Y with |X| >= delta n_A, |Y| >= delta n_B and density
    deviating from the base by more than delta.

    One side's subsets are enumerated exactly when it fits in
    ``exact_bits`` bits (random otherwise); the other side is always
    optimized exactly by prefix scan under its size floor.
    """
    if isinstance(g, BipartiteGraph):
        adj = g.to_dense().astype(np.float64)
    else:
        adj = np.asarray(g, dtype=np.float64)
    if left is not None or right is not None:
        li = np.asarray(left if left is not None else np.arange(adj.shape[0]))
        ri = np.asarray(right if right is not None else np.arange(adj.shape[1]))
        adj = adj[np.ix_(li, ri)]
    else:
        li = np.arange(adj.shape[0])
        ri = np.arange(adj.shape[1])
    n_a, n_b = adj.shape
    base = float(adj.mean())
    min_a = max(1, math.ceil(delta * n_a - 1e-9))
    min_b = max(1, math.ceil(delta * n_b - 1e-9))
    flip = n_b < n_a
    if flip:
        adj = adj.T
        n_a, n_b = n_b, n_a
        min_a, min_b = min_b, min_a

    exact = n_a <= exact_bits
    if exact:
        masks_iter = _mask_chunks(n_a, min_a)
    else:
        rng = generator(seed, "bipartite-witness")
        draws_m = (rng.random((draws, n_a)) < 0.5)
        draws_m = draws_m[draws_m.sum(axis=1) >= min_a]
        masks_iter = [draws_m.astype(np.float64)]

    best = None
    for patterns in masks_iter:
        scales = patterns.sum(axis=1)
        per_b = patterns @ adj  # (chunk, n_b) column scores per subset
        hit = _bulk_prefix_extreme(per_b, base, scales, min_b)
        if hit and (best is None or hit[2] > best[2] + 1e-15):
            row, ib, dev, d = hit[0], hit[1], hit[2], hit[3]
            best = (np.flatnonzero(patterns[row] > 0), ib, dev, d)
    if best is None or best[2] <= delta:
        return None
    ia, ib, dev, d = best
    if flip:
        ia, ib = ib, ia
    subsets = (li[np.sort(np.asarray(ia))], ri[np.sort(np.asarray(ib))])
    return RegularityWitness(
        subsets=subsets,
        sub_density=float(d),
        base_density=base,
        deviation=float(dev),
        exact=exact,
    )


@dataclass(frozen=True)
class VCResult:
    dim: int
    at_cap: bool
    witness: tuple

    def __int__(self):
        return self.dim


def vc_dimension(g, *, cap: int = 8) -> VCResult:
    """VC dimension of the left-neighborhood set system over the right
    vertices, by exhaustive shattering up to ``cap``.

    Stops as soon as no set of the current size is shattered; when
    every size up to ``cap`` is shattered the result is flagged as a
    lower bound with ``at_cap``.
    """
    if isinstance(g, BipartiteGraph):
        rows = g.to_dense()
    else:
        rows = np.asarray(g, dtype=bool)
    n_b = rows.shape[1]
    if rows.shape[0] == 0 or n_b == 0:
        return VCResult(0, False, ())
    dim, witness = 0, ()
    for d in range(1, min(cap, n_b) + 1):
        found = None
        for combo in itertools.combinations(range(n_b), d):
            patterns = np.unique(rows[:, combo], axis=0)
            if patterns.shape[0] == 2**d:
                found = combo
                break
        if found is None:
            return VCResult(dim, False, witness)
        dim, witness = d, found
    return VCResult(dim, dim == cap, witness)


def slicewise_vc(h: KPartiteHypergraph, *, cap: int = 8) -> dict:
    """Largest link VC dimension per pinned part.

    For every vertex of every part, the remaining bipartite link is
    measured in both orientations; the report maps each part to its
    maximum and carries the overall value under the key "max". Links
    are processed with ordered_map, so thread count cannot change the
    result.
    """
    if h.k != 3:
        raise ValueError("slicewise VC is defined for tripartite input")

    def one(task):
        part, v = task
        adj = link(h, ((part, v),)).to_dense()
        a = vc_dimension(adj, cap=cap)
        b = vc_dimension(adj.T, cap=cap)
        return max(a.dim, b.dim), a.at_cap or b.at_cap

    out = {}
    at_cap = False
    for part in range(3):
        tasks = [(part, v) for v in range(h.part_sizes[part])]
        results = ordered_map(one, tasks)
        out[part] = max(r[0] for r in results) if results else 0
        at_cap = at_cap or any(r[1] for r in results)
    out["max"] = max(out[p] for p in range(3))
    out["at_cap"] = at_cap
    return out
