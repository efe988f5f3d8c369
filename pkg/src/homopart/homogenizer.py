"""Homogeneous-partition pipeline for k-partite k-graphs.

The pipeline runs in three stages:

1. ``similarity_partition`` turns a homogeneous partition of a bipartite
   graph into an equipartition of the left side whose blocks have
   pairwise-similar neighborhoods.
2. ``tuple_partition`` covers the (k-1)-tuple product by anchor classes
   whose members have pairwise-similar neighborhoods in the target
   part, using a link-partition oracle per pin tuple.
3. ``homogeneous_partition`` runs stage 2 once per target part, reads
   off one neighborhood per class, and refines each part by the Venn
   atoms of those neighborhoods, equalized to a fixed block size.

Paper-mode constants are implemented exactly and fail loudly when they
exceed desk scale; practical mode keeps every structural step and
replaces the astronomically large anchor count with adaptive coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bitops
from .errors import CoverageError, InfeasibleParamsError
from .hypercore import BipartiteGraph, KPartiteHypergraph, VertexSet, link, neighborhood
from .partitions import LayeredPartition, PartPartition, common_refinement, equalize
from .rng import generator

MODES = ("paper", "practical")


def similarity_block_count(gamma: float, r: int) -> int:
    """Number of non-exceptional blocks q = ceil((1-gamma) 3r/gamma)."""
    if not 0.0 < gamma < 1.0:
        raise InfeasibleParamsError(f"gamma={gamma} outside (0, 1)")
    if r < 1:
        raise InfeasibleParamsError(f"r={r} must be at least 1")
    # 1e-9 guard absorbs float noise in the rational target value
    return math.ceil((1.0 - gamma) * 3.0 * r / gamma - 1e-9)


def similarity_input_tolerance(gamma: float) -> float:
    """Homogeneity gamma^3/48 expected of the input block pairs."""
    return gamma**3 / 48.0


def similarity_block_size(n: int, gamma: float, r: int) -> int:
    """Common block size m, the integer form of gamma n / (3r).

    Rounding must keep q * m >= (1 - gamma) n, otherwise the
    exceptional block overflows its gamma n budget, so m rounds up
    from (1 - gamma) n / q; this equals gamma n / (3r) whenever that
    value is an integer. Some (gamma, r, n) admit no integer in the
    feasible window, which ``similarity_partition`` reports as
    infeasible via the q * m <= n check.
    """
    q = similarity_block_count(gamma, r)
    return math.ceil((1.0 - gamma) * n / q - 1e-9)


@dataclass(frozen=True)
class ToleranceParams:
    """Tolerance cascade tying the target homogeneity to the oracle's.

    ``gamma`` is the similarity tolerance handed to the bipartite
    stage, ``gamma_prime`` the homogeneity that stage expects of its
    input partition, and ``eps_prime`` the homogeneity the link oracle
    must provide. In paper mode both derived values follow the fixed
    formulas; practical mode may override ``eps_prime``.
    """

    eps: float
    k: int
    r: int
    mode: str = "practical"
    eps_prime: float | None = None

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise InfeasibleParamsError(f"eps={self.eps} outside (0, 1/2)")
        if self.k < 2:
            raise InfeasibleParamsError(f"k={self.k} must be at least 2")
        if self.r < 1:
            raise InfeasibleParamsError(f"r={self.r} must be at least 1")
        if self.mode not in MODES:
            raise InfeasibleParamsError(f"unknown mode {self.mode!r}")
        if self.mode == "paper" and self.eps_prime is not None:
            raise InfeasibleParamsError("paper mode fixes eps_prime by formula")
        if self.eps_prime is None:
            object.__setattr__(self, "eps_prime", self.gamma**3 / 48.0)

    @property
    def gamma(self) -> float:
        return self.eps / (6.0 * self.k)

    @property
    def gamma_prime(self) -> float:
        return self.gamma**3 / 48.0

    @property
    def q(self) -> int:
        return similarity_block_count(self.gamma, self.r)

    def paper_anchor_count(self) -> int:
        """Anchor count (q/gamma)^(k-1) log(2/eps) of the sampling step."""
        return math.ceil(
            (self.q / self.gamma) ** (self.k - 1) * math.log(2.0 / self.eps)
        )


@dataclass(frozen=True)
class SimilarityResult:
    """Equipartition of the left side plus the run's diagnostics.

    ``partition`` has exceptional block 0 and blocks 1..q of size m.
    ``contract_met`` is False when eviction left fewer than q full
    blocks, which signals that the input partition was less homogeneous
    than promised; the partition is still returned for inspection.
    """

    partition: PartPartition
    q: int
    m: int
    gamma: float
    representatives: tuple
    bad_blocks: tuple
    bad_mass: int
    evicted: int
    shortfall: int
    max_intra_symdiff: int
    contract_met: bool


def _pairwise_symdiff(rows: np.ndarray) -> np.ndarray:
    return bitops.popcount(rows[:, None, :] ^ rows[None, :, :], axis=-1)


def similarity_partition(
    g: BipartiteGraph,
    left: PartPartition,
    right: PartPartition,
    gamma: float,
    r: int,
    *,
    seed: int = 0,
    exact_rep_threshold: int = 512,
) -> SimilarityResult:
    """Partition the left side into q equal blocks of similar vertices.

    ``left``/``right`` is a homogeneous partition of ``g`` with at most
    ``r`` left blocks (homogeneity is the caller's contract and is
    re-detected here only through the good/bad block classification).
    The returned blocks each have size m = gamma n/(3r); every pair of
    vertices inside one block has neighborhood symmetric difference at
    most gamma * n_right, which is asserted by a full popcount scan
    before returning.
    """
    if left.n != g.n_left or right.n != g.n_right:
        raise ValueError("partition sizes do not match the graph")
    if left.n_body_blocks() > r:
        raise InfeasibleParamsError(
            f"left partition has {left.n_body_blocks()} blocks, allowed r={r}"
        )
    n_x, n_y = g.n_left, g.n_right
    q = similarity_block_count(gamma, r)
    m = similarity_block_size(n_x, gamma, r)
    if m < 1 or q * m > n_x:
        raise InfeasibleParamsError(
            f"q={q}, m={m} infeasible for n={n_x} (need q*m <= n and m >= 1)"
        )
    gamma_prime = similarity_input_tolerance(gamma)

    # good/bad classification of left blocks by the mass of right
    # blocks forming a non-homogeneous pair with them
    bad = []
    bad_mass = 0
    for b in range(left.n_blocks):
        mass = 0
        bx = left.block_indices(b)
        if bx.size == 0:
            continue
        for c in range(right.n_blocks):
            cy = right.block_indices(c)
            if cy.size == 0:
                continue
            d = g.density(
                left=VertexSet.from_indices(bx, n_x),
                right=VertexSet.from_indices(cy, n_y),
            )
            if not (d <= gamma_prime or d >= 1.0 - gamma_prime):
                mass += int(cy.size)
        if mass > (gamma**2 / 16.0) * n_y:
            bad.append(b)
            bad_mass += int(bx.size)

    evict_threshold = gamma * n_y / 2.0
    rng = generator(seed, "similarity/representatives")
    exceptional = []
    representatives = []
    kept_chunks = []
    for b in range(left.n_blocks):
        bx = left.block_indices(b)
        if bx.size == 0:
            continue
        if b in bad:
            exceptional.append(bx)
            continue
        rows = g.rows[bx]
        if bx.size <= exact_rep_threshold:
            totals = _pairwise_symdiff(rows).sum(axis=1)
        else:
            # only the existence of a low-participation vertex matters,
            # so estimate totals from a sample of partners
            sample = rng.choice(bx.size, size=exact_rep_threshold, replace=False)
            totals = bitops.popcount(
                rows[:, None, :] ^ rows[sample][None, :, :], axis=(-1, -2)
            )
        rep_pos = int(np.argmin(totals))
        representatives.append((b, int(bx[rep_pos])))
        dist = bitops.symdiff_sizes(rows, rows[rep_pos])
        keep = dist < evict_threshold
        exceptional.append(bx[~keep])
        kept = bx[keep]
        n_full = kept.size // m
        for c in range(n_full):
            kept_chunks.append(kept[c * m:(c + 1) * m])
        exceptional.append(kept[n_full * m:])

    evicted = int(sum(len(e) for e in exceptional)) - bad_mass
    shortfall = max(0, q - len(kept_chunks))
    for chunk in kept_chunks[q:]:
        exceptional.append(chunk)
    kept_chunks = kept_chunks[:q]

    labels = np.zeros(n_x, dtype=np.int64)
    for i, chunk in enumerate(kept_chunks):
        labels[chunk] = i + 1
    partition = PartPartition(
        labels,
        part=left.part,
        n_blocks=len(kept_chunks) + 1,
        has_exceptional=True,
        equitable=True,
    )

    # postcondition scan: block sizes, exceptional budget, intra-block
    # neighborhood distances
    max_intra = 0
    for chunk in kept_chunks:
        dists = _pairwise_symdiff(g.rows[chunk])
        max_intra = max(max_intra, int(dists.max()))
    contract_met = shortfall == 0
    if contract_met:
        assert partition.exceptional_size() <= gamma * n_x + 1e-9
        assert max_intra <= gamma * n_y + 1e-9
    return SimilarityResult(
        partition=partition,
        q=q,
        m=m,
        gamma=gamma,
        representatives=tuple(representatives),
        bad_blocks=tuple(bad),
        bad_mass=bad_mass,
        evicted=evicted,
        shortfall=shortfall,
        max_intra_symdiff=max_intra,
        contract_met=contract_met,
    )


@dataclass(frozen=True)
class TuplePartition:
    """Partition of the source-tuple product into anchor classes.

    ``labels`` is an int tensor over the source parts (ascending part
    order, the target part removed); label 0 is the uncovered class,
    label i >= 1 collects the tuples whose neighborhood lies within
    ``threshold`` of anchor i's. ``anchors[i-1]`` is that anchor tuple
    in the same coordinate convention.
    """

    source_parts: tuple
    target_part: int
    labels: np.ndarray
    anchors: tuple
    anchor_rows: np.ndarray
    threshold: float
    eps: float
    mode: str
    uncovered: int
    budget: float

    @property
    def n_classes(self) -> int:
        return len(self.anchors)

    def class_members(self, i: int) -> np.ndarray:
        """Member tuples of class i as an (count, k-1) index array."""
        return np.argwhere(self.labels == i)

    def exceptional_count(self) -> int:
        return int(np.count_nonzero(self.labels == 0))


def _verify_tuple_partition(result: TuplePartition, rows: np.ndarray, seed: int):
    flat = result.labels.ravel()
    for i in range(1, result.n_classes + 1):
        members = np.flatnonzero(flat == i)
        if members.size == 0:
            continue
        if members.size > 4096:
            pick = generator(seed, f"tuple-verify/{i}").choice(
                members.size, size=2048, replace=False
            )
            members = members[pick]
        dist = bitops.symdiff_sizes(rows[members], result.anchor_rows[i - 1])
        assert int(dist.max()) <= result.threshold + 1e-9


def tuple_partition(
    h: KPartiteHypergraph,
    params: ToleranceParams,
    seed: int,
    *,
    target_part: int | None = None,
    max_anchors: int = 512,
) -> TuplePartition:
    """Cover the (k-1)-tuple product by neighborhood-similarity classes.

    Anchors are drawn with the given seed; every tuple is assigned to
    the lowest-index anchor whose target-part neighborhood is within
    eps*n/2 of its own, remaining tuples form class 0. In paper mode
    the anchor count follows the fixed formula and is drawn uniformly
    from all tuples; in practical mode anchors are drawn uniformly
    from the still-uncovered tuples until the uncovered mass drops to
    eps * (number of tuples), or ``max_anchors`` is hit, in which case
    a CoverageError carrying the achieved mass is raised.

    The oracle does not appear here: the assignment needs only
    neighborhoods and anchors. Link-partition structure enters through
    ``twin_diagnostics`` and the caller's choice of eps.
    """
    k = h.k
    if target_part is None:
        target_part = k - 1
    if not 0 <= target_part < k:
        raise ValueError(f"target part {target_part} out of range")
    sources = tuple(p for p in range(k) if p != target_part)
    hp = h.permute(sources + (target_part,))
    source_sizes = tuple(h.part_sizes[p] for p in sources)
    n_target = h.part_sizes[target_part]
    n_tuples = math.prod(source_sizes)
    rows = hp.fiber_rows()
    threshold = params.eps * n_target / 2.0
    budget = params.eps * n_tuples

    if params.mode == "paper":
        t = params.paper_anchor_count()
        if t > max_anchors:
            raise InfeasibleParamsError(
                f"paper-mode anchor count t={t} exceeds the cap {max_anchors}; "
                "use practical mode"
            )
        rng = generator(seed, f"tuple/{target_part}/anchors")
        anchor_flat = rng.integers(0, n_tuples, size=t)
    else:
        anchor_flat = None  # drawn adaptively below

    labels = np.zeros(n_tuples, dtype=np.int64)
    covered = np.zeros(n_tuples, dtype=bool)
    anchors = []
    anchor_rows = []

    def place(flat_idx):
        row = rows[flat_idx]
        fresh = ~covered
        dist = bitops.symdiff_sizes(rows[fresh], row)
        hit = np.flatnonzero(fresh)[dist <= threshold]
        labels[hit] = len(anchors) + 1
        covered[hit] = True
        anchors.append(tuple(np.unravel_index(flat_idx, source_sizes)))
        anchor_rows.append(row)

    if params.mode == "paper":
        for a in anchor_flat:
            place(int(a))
    else:
        rng = generator(seed, f"tuple/{target_part}/anchors")
        while int(np.count_nonzero(~covered)) > budget and len(anchors) < max_anchors:
            open_idx = np.flatnonzero(~covered)
            place(int(open_idx[rng.integers(open_idx.size)]))

    uncovered = int(np.count_nonzero(~covered))
    if uncovered > budget + 1e-9:
        raise CoverageError(uncovered, budget, len(anchors))
    result = TuplePartition(
        source_parts=sources,
        target_part=target_part,
        labels=labels.reshape(source_sizes),
        anchors=tuple(anchors),
        anchor_rows=np.array(anchor_rows, dtype=np.uint64).reshape(
            len(anchors), -1
        ),
        threshold=threshold,
        eps=params.eps,
        mode=params.mode,
        uncovered=uncovered,
        budget=budget,
    )
    _verify_tuple_partition(result, rows, seed)
    return result


@dataclass(frozen=True)
class TwinReport:
    """Diagnostics of the chain-twin structure of sampled tuples."""

    tuples: tuple
    good_fraction: dict
    chain_counts: tuple
    excellence_threshold: float
    excellent_fraction: float
    q: int


def twin_diagnostics(
    h: KPartiteHypergraph,
    oracle,
    gamma: float,
    r: int,
    *,
    tuples=None,
    sample_size: int = 32,
    seed: int = 0,
    target_part: int | None = None,
) -> TwinReport:
    """Count per-coordinate twins and chain twins of sampled tuples.

    Two tuples are coordinate-i twins when they differ only in their
    part-i entry and both entries lie in the same non-exceptional block
    of the similarity partition of the link pinned by the shared
    coordinates. A chain twin of e is any tuple reachable by one twin
    step per coordinate in part order; the count is the composition of
    the per-coordinate class sizes along the chain. Tuples with a count
    of at least prod_i(gamma n_i / q) are reported as excellent.
    """
    k = h.k
    if target_part is None:
        target_part = k - 1
    sources = tuple(p for p in range(k) if p != target_part)
    source_sizes = tuple(h.part_sizes[p] for p in sources)
    if tuples is None:
        rng = generator(seed, "twin/sample")
        tuples = [
            tuple(int(rng.integers(s)) for s in source_sizes)
            for _ in range(sample_size)
        ]
    tuples = [tuple(int(v) for v in e) for e in tuples]

    sim_cache = {}

    def sim(pins, side_part):
        """Similarity partition of ``side_part`` for the pinned link."""
        key = (pins, side_part)
        if key not in sim_cache:
            g = link(h, pins)
            free = sorted(set(range(k)) - {p for p, _ in pins})
            left_part, right_part = free
            if side_part == right_part:
                g = g.transpose()
                left_part, right_part = right_part, left_part
            res = similarity_partition(
                g,
                oracle.partition(pins, left_part),
                oracle.partition(pins, right_part),
                gamma,
                r,
                seed=seed,
            )
            sim_cache[key] = res.partition
        return sim_cache[key]

    q = similarity_block_count(gamma, r)
    threshold = math.prod(gamma * h.part_sizes[p] / q for p in sources)

    def class_of(e, coord):
        """Block indices of e's coordinate in its pinned similarity
        partition, or an empty array when the coordinate is bad."""
        pins = tuple(
            (sources[j], e[j]) for j in range(len(sources)) if j != coord
        )
        part = sim(pins, sources[coord])
        b = part.block_of(e[coord])
        if b == 0:
            return np.zeros(0, dtype=np.int64)
        return part.block_indices(b)

    def chain_count(e, coord):
        # the step at the last coordinate is pinned entirely by e, and
        # each earlier step is pinned by the branch values already
        # substituted for the later coordinates, so recurse downward
        if coord < 0:
            return 1
        total = 0
        for v in class_of(e, coord):
            total += chain_count(e[:coord] + (int(v),) + e[coord + 1:], coord - 1)
        return total

    good_hits = {i: 0 for i in range(len(sources))}
    counts = []
    for e in tuples:
        for i in range(len(sources)):
            if class_of(e, i).size:
                good_hits[i] += 1
        counts.append(chain_count(e, len(sources) - 1))
    n = len(tuples)
    excellent = sum(1 for c in counts if c >= threshold)
    return TwinReport(
        tuples=tuple(tuples),
        good_fraction={sources[i]: good_hits[i] / n for i in range(len(sources))},
        chain_counts=tuple(counts),
        excellence_threshold=threshold,
        excellent_fraction=excellent / n,
        q=q,
    )


@dataclass(frozen=True)
class PipelineReport:
    """Assembly record of a homogeneous_partition run."""

    eps: float
    inner_eps: float
    mode: str
    p: int
    block_size: tuple
    budget: float
    passes: tuple = field(repr=False)


def homogeneous_partition(
    h: KPartiteHypergraph,
    oracle,
    eps: float,
    seed: int,
    *,
    mode: str = "practical",
    eps_prime: float | None = None,
    max_anchors: int = 512,
) -> tuple[LayeredPartition, PipelineReport]:
    """Equipartition of every part, homogeneous at tolerance eps.

    Runs ``tuple_partition`` once per target part at the reduced
    tolerance eps^2/(8k), takes the lexicographically least member of
    each class as its representative, refines each part by the Venn
    atoms of the representative neighborhoods, and equalizes at block
    size eps^2 n/(8kp) where p is the largest atom count. The audit
    module is the authority on whether the output meets eps; this
    function guarantees structure, not the verdict.
    """
    if not 0.0 < eps < 0.5:
        raise InfeasibleParamsError(f"eps={eps} outside (0, 1/2)")
    k = h.k
    inner_eps = eps**2 / (8.0 * k)
    params = ToleranceParams(
        eps=inner_eps, k=k, r=oracle.r, mode=mode, eps_prime=eps_prime
    )
    passes = []
    neighborhoods = []
    for target in range(k):
        tp = tuple_partition(
            h,
            params,
            derive_pass_seed(seed, target),
            target_part=target,
            max_anchors=max_anchors,
        )
        passes.append(tp)
        hp = h.permute(tp.source_parts + (target,))
        sets = []
        for i in range(1, tp.n_classes + 1):
            members = tp.class_members(i)
            if members.size == 0:
                continue
            rep = tuple(int(v) for v in members[0])  # lexicographically least
            sets.append(neighborhood(hp, rep).to_bool())
        neighborhoods.append(sets)

    atom_parts = [
        common_refinement(h.part_sizes[i], neighborhoods[i], part=i)
        for i in range(k)
    ]
    p = max(ap.n_blocks for ap in atom_parts)
    sizes = []
    final = []
    for i in range(k):
        n_i = h.part_sizes[i]
        m = max(1, math.floor(eps**2 * n_i / (8.0 * k * p) + 1e-9))
        sizes.append(m)
        final.append(equalize(atom_parts[i], m))
    budget = 8.0 * k * p / eps**2
    report = PipelineReport(
        eps=eps,
        inner_eps=inner_eps,
        mode=mode,
        p=p,
        block_size=tuple(sizes),
        budget=budget,
        passes=tuple(passes),
    )
    return LayeredPartition(final), report


def derive_pass_seed(seed: int, target: int) -> int:
    from .rng import derive

    return derive(seed, f"pipeline/target{target}")
