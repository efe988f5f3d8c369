"""Tower-type lower-bound machine.

Builds the layered weighted tripartite graphs whose links all admit
small regular partitions while the graph itself defeats every small
weakly regular partition. The pieces: a stunted doubling sequence of
interval partitions, orthogonal set families drawn by rejection
sampling, the level graphs and their dyadic weight stack, per-vertex
link certificates, quasirandomness audits, the refinement cascade that
extracts irregularity witnesses from undersized candidate partitions,
and a sampler down to an unweighted graph.

Paper mode enforces the full parameter regime, which puts real runs far
out of desk reach; toy mode keeps the structural pipeline bit for bit
identical but lets the caller pick the layer count, growth function,
and coupling threshold, recording every relaxation on the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .auditor import RegularityWitness, bipartite_regularity_witness, verify_witness, weak_regularity_witness
from .errors import DivisibilityError, FamilyRejectionError, InfeasibleParamsError
from .hypercore import BipartiteGraph, KPartiteHypergraph, WeightedTripartite, _frozen
from .partitions import LayeredPartition, PartPartition, beta_refines, common_refinement
from .rng import derive, generator

MODES = ("paper", "toy")

#: schedule bound above which the cascade induction is unsound
CASCADE_BETA_CAP = 1.0 / 72.0


def growth_function(m: int) -> int:
    """Default level growth max(floor(e^(m/16)), 2)."""
    return max(int(math.floor(math.exp(m / 16.0))), 2)


def layer_count(eps: float) -> int:
    """Layer count floor(log_7(1/eps)/4 - 3) for the strict regime."""
    x = 0.25 * (math.log(1.0 / eps) / math.log(7.0)) - 3.0
    return int(math.floor(x + 1e-9))


def coupling_threshold(delta: float) -> int:
    """Growth-stunting threshold ceil(4/delta^4)."""
    return math.ceil(4.0 / float(delta) ** 4 - 1e-9)


@dataclass(frozen=True)
class GowersParams:
    """Materialized parameter set for one construction run.

    ``levels`` holds the full sequence m_0..m_t. Each entry divides the
    next, the ratio never exceeds the growth function at the previous
    value, and the growth is stunted to exactly ``s0`` at the critical
    step. ``relaxations`` names every strict-regime constraint a toy
    run replaced; it is empty in paper mode.
    """

    eps: float
    delta: float
    mode: str
    t: int
    s0: int
    levels: tuple
    seed: int
    relaxations: tuple = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(self.levels) != self.t + 1 or self.levels[0] != 1:
            raise ValueError("levels must run m_0=1 through m_t")
        for prev, cur in zip(self.levels, self.levels[1:]):
            if cur <= prev or cur % prev:
                raise ValueError("each level must be a proper multiple of the last")

    def ratio(self, r: int) -> int:
        """Fine blocks per coarse block at level r (called M elsewhere)."""
        return self.levels[r] // self.levels[r - 1]


def build_sequence(eps, delta, mode="paper", *, t=None, growth=None, s0=None,
                   seed=0) -> GowersParams:
    """Derive the level sequence for the given regime.

    Paper mode computes everything from (eps, delta) and rejects
    overrides; eps too large for at least one layer is an error that
    points at toy mode. Toy mode requires an explicit layer count and
    growth rule (an integer means a constant ratio), accepts an
    ``s0`` override, and drops the delta <= eps coupling if asked to,
    stamping each relaxation into the result.
    """
    eps = float(eps)
    delta = float(delta)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps={eps} out of range (0, 1)")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta={delta} out of range (0, 1)")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")

    relaxations = []
    if mode == "paper":
        if t is not None or growth is not None or s0 is not None:
            raise ValueError("paper mode derives t, growth, and s0 itself")
        if delta > eps:
            raise ValueError(f"paper mode needs delta <= eps, got {delta} > {eps}")
        t = layer_count(eps)
        if t < 1:
            raise InfeasibleParamsError(
                f"eps={eps} leaves no layers (t={t}); paper mode needs "
                f"eps <= 7^-16, use toy mode with explicit t and growth"
            )
        grow = growth_function
        s0 = coupling_threshold(delta)
    else:
        if t is None or growth is None:
            raise ValueError("toy mode needs explicit t and growth")
        t = int(t)
        if t < 1:
            raise ValueError(f"need at least one layer, got t={t}")
        if callable(growth):
            grow = growth
        else:
            ratio = int(growth)
            grow = lambda m, _ratio=ratio: _ratio
        relaxations += ["t", "growth"]
        if s0 is None:
            s0 = coupling_threshold(delta)
        else:
            s0 = int(s0)
            relaxations.append("s0")
        if delta > eps:
            relaxations.append("delta-coupling")
    if s0 < 2:
        raise ValueError(f"threshold s0={s0} must be at least 2")

    levels = [1]
    for r in range(1, t + 1):
        phi = int(grow(levels[-1]))
        if phi < 2:
            raise ValueError(f"growth({levels[-1]}) = {phi} is below 2")
        if levels[-1] < s0 and phi >= s0:
            levels.append(levels[-1] * s0)
        else:
            levels.append(levels[-1] * phi)
        assert levels[-1] // levels[-2] <= max(phi, s0)
    return GowersParams(
        eps=eps,
        delta=delta,
        mode=mode,
        t=t,
        s0=int(s0),
        levels=tuple(levels),
        seed=int(seed),
        relaxations=tuple(relaxations),
    )


@dataclass(frozen=True)
class OrthogonalFamily:
    """Accepted two-coloring family over [M], one partition per index.

    ``x_side[i, j]`` says element j sits on the X side of partition i.
    ``z_counts[j, j']`` is the number of indices on which j and j'
    agree; the acceptance event bounds every off-diagonal entry by
    3m/4. ``item1_checked`` records whether the size and intersection
    bands were in scope for this M.
    """

    m: int
    M: int
    x_side: np.ndarray
    z_counts: np.ndarray
    item1_checked: bool
    attempts: int

    def x_indices(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.x_side[i])

    def y_indices(self, i: int) -> np.ndarray:
        return np.flatnonzero(~self.x_side[i])

    def side_sums(self, lam: np.ndarray) -> tuple:
        """(X-side, Y-side) weight totals of ``lam`` per partition."""
        lam = np.asarray(lam, dtype=np.float64)
        x = self.x_side @ lam
        return x, float(lam.sum()) - x


def _item1_violations(side: np.ndarray) -> int:
    m, M = side.shape
    band = M ** (2.0 / 3.0)
    s = side.astype(np.float64)
    sizes = s.sum(axis=1)
    bad = int((np.abs(sizes - M / 2.0) > band).sum())
    bad += int((np.abs((M - sizes) - M / 2.0) > band).sum())
    off = ~np.eye(m, dtype=bool)
    for left, right in ((s, s), (s, 1.0 - s), (1.0 - s, 1.0 - s)):
        inter = left @ right.T
        bad += int((np.abs(inter - M / 4.0)[off] > band).sum())
    return bad


def _agreement_counts(side: np.ndarray) -> np.ndarray:
    # float matmul so BLAS carries the M x M product; counts stay exact
    s = side.astype(np.float64)
    z = s.T @ s + (1.0 - s).T @ (1.0 - s)
    return np.rint(z).astype(np.int64)


def orthogonal_family(m, M, seed=0, max_attempts=64) -> OrthogonalFamily:
    """Rejection-sample a family until both acceptance checks pass.

    Each element picks a side by fair coin. The size and intersection
    bands are checked only when M >= ln^3(4 m^2); the agreement event
    is always checked. Both fail with probability below one half in
    the supported regime (M at most e^(m/16)), so a handful of
    attempts normally suffices; far outside it, e.g. M much larger
    than e^(m/16), the agreement event is hopeless and the attempt cap
    triggers with the failing statistics attached.
    """
    m, M = int(m), int(M)
    if m < 1:
        raise ValueError(f"need at least one partition, got m={m}")
    if M < 2:
        raise ValueError(f"ground set needs at least 2 elements, got M={M}")
    check_item1 = M >= math.log(4.0 * m * m) ** 3
    cap = 0.75 * m
    stats = {}
    for attempt in range(int(max_attempts)):
        rng = generator(seed, f"orthogonal/{m}x{M}/attempt{attempt}")
        side = rng.random((m, M)) < 0.5
        item1_bad = _item1_violations(side) if check_item1 else 0
        z = _agreement_counts(side)
        off = z[~np.eye(M, dtype=bool)]
        event_bad = int((off > cap).sum())
        if item1_bad == 0 and event_bad == 0:
            return OrthogonalFamily(
                m=m,
                M=M,
                x_side=_frozen(side),
                z_counts=_frozen(z),
                item1_checked=check_item1,
                attempts=attempt + 1,
            )
        stats = {
            "m": m,
            "M": M,
            "item1_violations": item1_bad,
            "agreement_violations": event_bad // 2,
            "worst_agreement": int(off.max()),
            "agreement_cap": cap,
        }
    raise FamilyRejectionError(int(max_attempts), stats)


@dataclass(frozen=True)
class Item2Report:
    """Margin count for one weight vector against a family.

    ``count`` is the number of partitions whose lighter side still
    carries more than ``eps`` of the total weight; the guarantee is
    ``count >= eta * m`` whenever the stated hypotheses hold, and
    ``problems`` lists the hypotheses that did not.
    """

    count: int
    required: float
    satisfied: bool
    hypothesis_ok: bool
    problems: tuple
    mins: np.ndarray

    def __int__(self):
        return self.count


def item2_margin(family: OrthogonalFamily, lam, eps, zeta, eta) -> Item2Report:
    """Count partitions with both sides heavier than ``eps``.

    ``lam`` must be a probability vector over the family's ground set;
    that much is a hard error. The spread hypotheses (zeta at most a
    half, the (1-eta)(1-4 eps) slack inequality, and max(lam) at most
    1 - zeta) are reported rather than enforced, since the count is
    still meaningful without them. When they do hold, the agreement
    event carried by every accepted family forces the count to at
    least eta * m, and that is asserted.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (family.M,):
        raise ValueError(f"weight vector must have length {family.M}")
    if (lam < 0).any():
        raise ValueError("weights must be nonnegative")
    if abs(float(lam.sum()) - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {float(lam.sum()):.6g}")

    problems = []
    if zeta > 0.5:
        problems.append(f"zeta={zeta:.6g} above 1/2")
    if (1.0 - eta) * (1.0 - 4.0 * eps) < 1.0 - zeta + zeta * zeta - 1e-12:
        problems.append("slack inequality (1-eta)(1-4eps) >= 1-zeta+zeta^2 fails")
    if float(lam.max()) > 1.0 - zeta + 1e-12:
        problems.append(f"max weight {float(lam.max()):.6g} above 1-zeta")

    xs, ys = family.side_sums(lam)
    mins = np.minimum(xs, ys)
    count = int((mins > eps).sum())
    required = float(eta) * family.m
    hypothesis_ok = not problems
    satisfied = count >= required - 1e-9
    if hypothesis_ok and not satisfied:
        raise AssertionError(
            f"margin count {count} below guaranteed {required:.6g} "
            f"despite valid hypotheses"
        )
    return Item2Report(
        count=count,
        required=required,
        satisfied=satisfied,
        hypothesis_ok=hypothesis_ok,
        problems=tuple(problems),
        mins=_frozen(mins),
    )


@dataclass(frozen=True)
class IntervalLayering:
    """Interval partitions per level plus the level graphs.

    ``a_levels[r]`` and ``b_levels[r]`` split the first two parts into
    ``levels[r]`` equal intervals; each level refines the previous one
    exactly. ``c_layers`` splits the third part into one interval per
    level. ``families[r-1]`` and ``graphs[r-1]`` belong to level r.
    """

    n: int
    levels: tuple
    a_levels: tuple
    b_levels: tuple
    c_layers: PartPartition
    families: tuple
    graphs: tuple

    @property
    def t(self) -> int:
        return len(self.levels) - 1

    def layer_of(self, c: int) -> int:
        """1-based level of a third-part vertex."""
        return self.c_layers.block_of(c) + 1

    def layer_indices(self, r: int) -> np.ndarray:
        return self.c_layers.block_indices(r - 1)


@dataclass(frozen=True)
class GowersBuild:
    params: GowersParams
    n: int
    weighted: WeightedTripartite
    layering: IntervalLayering


def _level_dense(n: int, family: OrthogonalFamily) -> np.ndarray:
    """Level adjacency from per-interval side choices.

    A first-part vertex in coarse interval i at fine offset k meets a
    second-part vertex in coarse interval j at fine offset k' exactly
    when k's side in partition j agrees with k's side in partition i,
    which realizes the two complete blocks per interval pair.
    """
    m, M = family.m, family.M
    coarse = np.arange(n) // (n // m)
    fine = (np.arange(n) % (n // m)) // (n // (m * M))
    side = family.x_side
    return side[coarse[None, :], fine[:, None]] == side[coarse[:, None], fine[None, :]]


def level_graph(n: int, family: OrthogonalFamily) -> BipartiteGraph:
    """Standalone level graph on n+n vertices for one family."""
    n = int(n)
    fine = family.m * family.M
    if n % fine:
        raise DivisibilityError(f"n={n} is not divisible by {fine} fine intervals")
    return BipartiteGraph.from_dense(_level_dense(n, family))


def build_weighted(params: GowersParams, n: int) -> GowersBuild:
    """Assemble the weighted graph and all level structure at size n.

    Each part has n vertices; n must be divisible by the finest level
    and by the layer count so every interval is exact. Level r
    contributes weight 2^-r on its layer's slab wherever the level
    graph has an edge, so every cell weight is exactly 0 or 2^-r for
    its layer, and the stack stays within [0, 1].
    """
    n = int(n)
    t = params.t
    finest = params.levels[-1]
    if n % finest:
        raise DivisibilityError(
            f"n={n} is not divisible by the finest level {finest}"
        )
    if n % t:
        raise DivisibilityError(f"n={n} does not split into {t} equal layers")

    a_levels = tuple(PartPartition.intervals(n, m, part=0) for m in params.levels)
    b_levels = tuple(PartPartition.intervals(n, m, part=1) for m in params.levels)
    c_layers = PartPartition.intervals(n, t, part=2)
    for fine, coarse in zip(a_levels[1:], a_levels[:-1]):
        assert beta_refines(fine, coarse, 0.0).refines
    for fine, coarse in zip(b_levels[1:], b_levels[:-1]):
        assert beta_refines(fine, coarse, 0.0).refines

    families = []
    graphs = []
    weights = np.zeros((n, n, n), dtype=np.float64)
    for r in range(1, t + 1):
        fam = orthogonal_family(
            params.levels[r - 1],
            params.ratio(r),
            seed=derive(params.seed, f"gowers/level{r}"),
        )
        adj = _level_dense(n, fam)
        families.append(fam)
        graphs.append(BipartiteGraph.from_dense(adj))
        weights[:, :, c_layers.block_indices(r - 1)] = np.where(
            adj, 2.0 ** -r, 0.0
        )[:, :, None]

    layering = IntervalLayering(
        n=n,
        levels=params.levels,
        a_levels=a_levels,
        b_levels=b_levels,
        c_layers=c_layers,
        families=tuple(families),
        graphs=tuple(graphs),
    )
    return GowersBuild(
        params=params, n=n, weighted=WeightedTripartite(weights), layering=layering
    )


CERTIFICATE_KINDS = ("quasirandom", "constant-boxes", "layer-constant")


@dataclass(frozen=True)
class LinkCertificate:
    """Claimed regular partition of one vertex link.

    ``partitions`` covers the two remaining parts in part order. The
    three kinds: a third-part vertex on a deep level carries the
    trivial pair (the whole level graph is regular); one on a shallow
    level carries the level intervals, every pair of which is constant;
    a first- or second-part vertex carries the overlap atoms of its
    per-level neighborhoods against the layer partition, constant on
    every pair. ``size_bound`` is the a-priori cap for the kind.
    """

    part: int
    vertex: int
    kind: str
    level: int | None
    partitions: LayeredPartition
    size_bound: int


def link_certificate(build: GowersBuild, part: int, v: int) -> LinkCertificate:
    lay = build.layering
    params = build.params
    n = build.n
    v = int(v)
    if part not in (0, 1, 2):
        raise ValueError(f"part {part} out of range")
    if not 0 <= v < n:
        raise ValueError(f"vertex {v} out of range for part {part}")

    if part == 2:
        r = lay.layer_of(v)
        if params.levels[r - 1] >= params.s0:
            return LinkCertificate(
                part=2,
                vertex=v,
                kind="quasirandom",
                level=r,
                partitions=LayeredPartition(
                    [PartPartition.trivial(n), PartPartition.trivial(n)]
                ),
                size_bound=1,
            )
        return LinkCertificate(
            part=2,
            vertex=v,
            kind="constant-boxes",
            level=r,
            partitions=LayeredPartition([lay.a_levels[r], lay.b_levels[r]]),
            size_bound=params.s0 ** 2,
        )

    # first- or second-part vertex: the other interval side is atomized
    # by the per-level neighborhoods, the layer side is kept as is
    neighborhoods = []
    for g in lay.graphs:
        adj = g.to_dense()
        neighborhoods.append(adj[v] if part == 0 else adj[:, v])
    atoms = common_refinement(n, neighborhoods)
    layer_part = PartPartition(lay.c_layers.labels, n_blocks=params.t)
    return LinkCertificate(
        part=part,
        vertex=v,
        kind="layer-constant",
        level=None,
        partitions=LayeredPartition([atoms, layer_part]),
        size_bound=2 ** params.t,
    )


@dataclass(frozen=True)
class CertificateCheck:
    kind: str
    exact: bool
    ok: bool
    worst: tuple | None
    audit: "QuasirandomnessReport | None" = None
    witness: RegularityWitness | None = None


def _link_matrix(build: GowersBuild, part: int, v: int) -> np.ndarray:
    w = build.weighted.weights
    if part == 0:
        return w[v]
    if part == 1:
        return w[:, v, :]
    return w[:, :, v]


def verify_certificate(build: GowersBuild, cert: LinkCertificate, *,
                       delta=None, draws=2000, seed=0) -> CertificateCheck:
    """Check a certificate against the actual link weights.

    Constant-boxes and layer-constant claims are exact: every certified
    block pair must carry a single weight value. Quasirandom claims are
    checked one-sidedly, by the quasirandomness audit plus a sampled
    witness search on the level graph; ``ok`` then means no witness
    surfaced within the budget.
    """
    if cert.kind == "quasirandom":
        lay = build.layering
        r = cert.level
        g = lay.graphs[r - 1]
        d = build.params.delta if delta is None else float(delta)
        audit = quasirandomness_audit(
            g,
            d,
            b_intervals=lay.b_levels[r - 1],
            level_M=build.params.ratio(r),
        )
        wit = bipartite_regularity_witness(g, d, draws=draws, seed=seed)
        return CertificateCheck(
            kind=cert.kind,
            exact=False,
            ok=wit is None,
            worst=None,
            audit=audit,
            witness=wit,
        )

    link = _link_matrix(build, cert.part, cert.vertex)
    left, right = cert.partitions[0], cert.partitions[1]
    worst = None
    for a in range(left.n_blocks):
        ai = left.block_indices(a)
        if not ai.size:
            continue
        for b in range(right.n_blocks):
            bi = right.block_indices(b)
            if not bi.size:
                continue
            sub = link[np.ix_(ai, bi)]
            lo, hi = float(sub.min()), float(sub.max())
            if hi - lo > 0.0:
                worst = ((a, b), lo, hi)
                break
        if worst:
            break
    return CertificateCheck(
        kind=cert.kind, exact=True, ok=worst is None, worst=worst
    )


@dataclass(frozen=True)
class QuasirandomnessReport:
    """Two-condition regularity audit of a level graph.

    Condition 1 bounds how many right-side vertices have degree off
    the mean by more than delta^4 n. Condition 2 bounds codegree mass
    over large right subsets; it is decided exactly by subset
    enumeration at small n and otherwise by the sufficient pointwise
    statistic (cross-interval codegree excess plus the same-interval
    mass term). The optional bands report per-vertex degree and
    cross-interval codegree against 1/2 and 1/4 at the given
    tolerance; they are informational.
    """

    n: int
    delta: float
    density: float
    degree_violations: int
    degree_allowance: float
    condition1: bool
    condition2_mode: str
    condition2: bool
    condition2_worst: float
    band_tol: float | None = None
    degree_band: bool | None = None
    codegree_band: bool | None = None

    @property
    def passed(self) -> bool:
        return self.condition1 and self.condition2


def quasirandomness_audit(g, delta, *, b_intervals=None, level_M=None,
                          exact_bits=22, band_tol=None) -> QuasirandomnessReport:
    if isinstance(g, BipartiteGraph):
        adj = g.to_dense().astype(np.float64)
    else:
        adj = np.asarray(g, dtype=np.float64)
    if adj.shape[0] != adj.shape[1]:
        raise ValueError("the audit needs equal part sizes")
    n = adj.shape[0]
    delta = float(delta)
    d = float(adj.mean())

    degs = adj.sum(axis=0)  # degree of each right-side vertex
    off = np.abs(degs - d * n)
    violations = int((off > delta ** 4 * n + 1e-9).sum())
    allowance = delta ** 4 * n / 8.0
    condition1 = violations <= allowance + 1e-9

    codeg = adj.T @ adj
    f = codeg - d * d * n

    if n <= exact_bits:
        mode = "exact"
        min_size = max(1, math.ceil(delta * n - 1e-9))
        worst = -math.inf
        condition2 = True
        bit = np.arange(n, dtype=np.uint64)
        step = 1 << min(16, n)
        for start in range(0, 1 << n, step):
            masks = np.arange(start, min(start + step, 1 << n), dtype=np.uint64)
            pat = ((masks[:, None] >> bit[None, :]) & 1).astype(np.float64)
            sizes = pat.sum(axis=1)
            keep = sizes >= min_size
            if not keep.any():
                continue
            pat, sizes = pat[keep], sizes[keep]
            s = ((pat @ f) * pat).sum(axis=1)
            margin = s - (delta ** 3 / 2.0) * n * sizes ** 2
            worst = max(worst, float(margin.max()))
            if worst >= 0.0:
                condition2 = False
        condition2_worst = worst
    else:
        if b_intervals is None:
            raise ValueError(
                f"n={n} is past the exact range; pass the coarse right-side "
                f"intervals for the statistic check"
            )
        mode = "statistic"
        labels = b_intervals.labels
        m = b_intervals.n_blocks
        same = labels[:, None] == labels[None, :]
        cross_max = float(f[~same].max()) if (~same).any() else -math.inf
        pointwise_ok = cross_max <= (delta ** 3 / 4.0) * n + 1e-9
        same_interval_ok = m >= 4.0 / delta ** 4 - 1e-9
        condition2 = pointwise_ok and same_interval_ok
        condition2_worst = cross_max - (delta ** 3 / 4.0) * n

    degree_band = codegree_band = None
    tol = None
    if level_M is not None:
        tol = float(band_tol) if band_tol is not None else float(level_M) ** (-1.0 / 3.0)
        degree_band = bool((np.abs(degs - n / 2.0) <= tol * n + 1e-9).all())
        if b_intervals is not None:
            labels = b_intervals.labels
            cross = labels[:, None] != labels[None, :]
            codegree_band = bool(
                (np.abs(codeg[cross] - n / 4.0) <= tol * n + 1e-9).all()
            ) if cross.any() else True

    return QuasirandomnessReport(
        n=n,
        delta=delta,
        density=d,
        degree_violations=violations,
        degree_allowance=allowance,
        condition1=condition1,
        condition2_mode=mode,
        condition2=condition2,
        condition2_worst=condition2_worst,
        band_tol=tol,
        degree_band=degree_band,
        codegree_band=codegree_band,
    )


@dataclass(frozen=True)
class CascadeWitness:
    """Irregular triple extracted from a failed refinement level.

    The complete and empty sub-boxes live inside the candidate blocks
    (s, u, ell); their weighted densities differ by exactly 2^-level.
    ``complete`` and ``empty`` are the two sub-triples as verifiable
    witnesses against the block base density; ``search`` is whatever
    the generic sampled witness search found on the same blocks.
    """

    level: int
    side: str
    s: int
    u: int
    ell: int
    coarse: int
    margin_index: int
    complete: RegularityWitness
    empty: RegularityWitness
    gap: float
    search: RegularityWitness | None


@dataclass(frozen=True)
class CascadeLevel:
    r: int
    beta: float
    valid: bool
    runnable: bool
    a_report: object
    b_report: object
    refines: bool | None
    witnesses: tuple


@dataclass(frozen=True)
class CascadeReport:
    eps: float
    betas: tuple
    levels: tuple

    def first_failure(self):
        for level in self.levels:
            if level.refines is False:
                return level
        return None


def _extract_witness(build, candidate, r, beta_prev, eps, prev_fine, cur_fine,
                     prev_other, side, search_draws, seed):
    """Walk the failed-refinement proof and return a witness, or None.

    ``side`` names which interval family the fine partition refines;
    the other side supplies the crossing block. All index choices scan
    in ascending order, so extraction is deterministic.
    """
    lay = build.layering
    params = build.params
    n = build.n
    fam = lay.families[r - 1]
    m = params.levels[r - 1]
    M = params.ratio(r)
    w_coarse = n // m
    w_fine = n // params.levels[r]
    fine_part = candidate[0] if side == "A" else candidate[1]
    other_part = candidate[1] if side == "A" else candidate[0]
    third = candidate[2]
    weights = build.weighted.weights

    lost = np.flatnonzero(prev_fine.matched & ~cur_fine.matched)
    for s in lost:
        i = int(prev_fine.parents[s])
        block = fine_part.block_indices(int(s))
        inside = block[block // w_coarse == i]
        mu_counts = np.bincount(
            (inside % w_coarse) // w_fine, minlength=M
        ).astype(np.float64)
        mu = mu_counts / block.size
        total = float(mu.sum())
        if total <= 0.0:
            continue
        lam = mu / total
        margin = item2_margin(
            fam, lam, 2.0 * eps, zeta=6.0 * beta_prev, eta=5.0 * beta_prev
        )
        good = set(np.flatnonzero(margin.mins > 2.0 * eps).tolist())
        if not good:
            continue

        pick = None
        for u in range(prev_other.matched.size):
            if prev_other.matched[u] and int(prev_other.parents[u]) in good:
                pick = (int(u), int(prev_other.parents[u]))
                break
        if pick is None:
            continue
        u, h = pick

        fine_of = lambda idx: (idx % w_coarse) // w_fine
        v_x = inside[fam.x_side[h, fine_of(inside)]]
        v_y = inside[~fam.x_side[h, fine_of(inside)]]
        other = other_part.block_indices(u)
        other_in = other[other // w_coarse == h]
        w_x = other_in[fam.x_side[i, fine_of(other_in)]]
        w_y = other_in[~fam.x_side[i, fine_of(other_in)]]
        if not (v_x.size and v_y.size):
            continue
        if w_x.size >= w_y.size:
            w_pick, v_complete, v_empty = w_x, v_x, v_y
        else:
            w_pick, v_complete, v_empty = w_y, v_y, v_x
        if not w_pick.size:
            continue

        adj = lay.graphs[r - 1].to_dense()
        if side == "A":
            assert adj[np.ix_(v_complete, w_pick)].all()
            assert not adj[np.ix_(v_empty, w_pick)].any()
        else:
            assert adj[np.ix_(w_pick, v_complete)].all()
            assert not adj[np.ix_(w_pick, v_empty)].any()

        layer = lay.layer_indices(r)
        chosen_ell = None
        for ell in range(third.n_blocks):
            rl = third.block_indices(ell)
            rc = np.intersect1d(rl, layer, assume_unique=True)
            if rl.size and rc.size and rc.size >= eps * rl.size:
                chosen_ell = (ell, rl, rc)
                break
        if chosen_ell is None:
            continue
        ell, r_block, rc = chosen_ell

        if side == "A":
            box = lambda vv: (vv, w_pick, rc)
            blocks = (fine_part.block_indices(int(s)), other, r_block)
        else:
            box = lambda vv: (w_pick, vv, rc)
            blocks = (other, fine_part.block_indices(int(s)), r_block)
        base = float(weights[np.ix_(*blocks)].mean())
        d_complete = float(weights[np.ix_(*box(v_complete))].mean())
        d_empty = float(weights[np.ix_(*box(v_empty))].mean())

        complete = RegularityWitness(
            subsets=box(v_complete),
            sub_density=d_complete,
            base_density=base,
            deviation=abs(d_complete - base),
            exact=True,
        )
        empty = RegularityWitness(
            subsets=box(v_empty),
            sub_density=d_empty,
            base_density=base,
            deviation=abs(d_empty - base),
            exact=True,
        )
        search = weak_regularity_witness(
            build.weighted,
            blocks,
            eps,
            draws=search_draws,
            seed=derive(seed, f"cascade/level{r}/{side}{int(s)}"),
        ) if search_draws else None
        return CascadeWitness(
            level=r,
            side=side,
            s=int(s),
            u=u,
            ell=ell,
            coarse=i,
            margin_index=h,
            complete=complete,
            empty=empty,
            gap=d_complete - d_empty,
            search=search,
        )
    return None


def refinement_cascade(build: GowersBuild, candidate: LayeredPartition,
                       eps=None, *, search_draws=500, seed=0) -> CascadeReport:
    """Walk the interval levels checking 7^r-scaled refinement.

    The candidate must cover all three parts with nonempty blocks of
    equal size up to a factor of two (empty blocks are tolerated and
    ignored). Each level r is checked at beta_r = 7^r eps^(1/4);
    levels with beta_r at or above 1/2 cannot even be tested and are
    flagged, those above 1/72 are flagged as outside the sound
    schedule but still tested. Where refinement fails and the previous
    level matched, a witness is extracted and re-verified against the
    weight tensor.
    """
    if candidate.k != 3:
        raise ValueError("the cascade runs on a three-part candidate")
    eps = build.params.eps if eps is None else float(eps)
    sizes = np.concatenate([p.sizes() for p in candidate])
    nonzero = sizes[sizes > 0]
    if not nonzero.size:
        raise ValueError("candidate has no nonempty blocks")
    if nonzero.max() > 2 * nonzero.min():
        raise ValueError(
            f"candidate blocks span {nonzero.min()}..{nonzero.max()}, "
            f"more than a factor of two"
        )
    for part in range(3):
        if candidate[part].n != build.n:
            raise ValueError(f"candidate part {part} does not cover {build.n} vertices")

    lay = build.layering
    t = build.params.t
    betas = tuple(7.0 ** r * eps ** 0.25 for r in range(t + 1))
    prev_a = prev_b = None
    if betas[0] < 0.5:
        prev_a = beta_refines(candidate[0], lay.a_levels[0], betas[0])
        prev_b = beta_refines(candidate[1], lay.b_levels[0], betas[0])

    levels = []
    for r in range(1, t + 1):
        beta = betas[r]
        valid = beta <= CASCADE_BETA_CAP + 1e-12
        runnable = beta < 0.5
        if not runnable:
            levels.append(CascadeLevel(
                r=r, beta=beta, valid=valid, runnable=False,
                a_report=None, b_report=None, refines=None, witnesses=(),
            ))
            prev_a = prev_b = None
            continue
        a_rep = beta_refines(candidate[0], lay.a_levels[r], beta)
        b_rep = beta_refines(candidate[1], lay.b_levels[r], beta)
        refines = a_rep.refines and b_rep.refines
        witnesses = []
        if not refines and prev_a is not None and prev_b is not None:
            if not a_rep.refines:
                wit = _extract_witness(
                    build, candidate, r, betas[r - 1], eps,
                    prev_a, a_rep, prev_b, "A", search_draws, seed,
                )
                if wit is not None:
                    witnesses.append(wit)
            if not b_rep.refines and not witnesses:
                wit = _extract_witness(
                    build, candidate, r, betas[r - 1], eps,
                    prev_b, b_rep, prev_a, "B", search_draws, seed,
                )
                if wit is not None:
                    witnesses.append(wit)
        levels.append(CascadeLevel(
            r=r, beta=beta, valid=valid, runnable=True,
            a_report=a_rep, b_report=b_rep, refines=refines,
            witnesses=tuple(witnesses),
        ))
        prev_a, prev_b = a_rep, b_rep
    return CascadeReport(eps=eps, betas=betas, levels=tuple(levels))


@dataclass(frozen=True)
class BoxCheck:
    expected: float
    observed: float
    sigma: float
    within: bool


@dataclass(frozen=True)
class ConcentrationReport:
    full: BoxCheck
    boxes: tuple
    n_within: int
    fraction_within: float


@dataclass(frozen=True)
class SampleResult:
    graph: KPartiteHypergraph
    report: ConcentrationReport


def _box_check(weights, sampled, idx) -> BoxCheck:
    sub_w = weights[np.ix_(*idx)]
    sub_s = sampled[np.ix_(*idx)]
    cells = sub_w.size
    expected = float(sub_w.mean())
    observed = float(sub_s.mean())
    sigma = float(np.sqrt((sub_w * (1.0 - sub_w)).sum()) / cells)
    within = abs(observed - expected) <= 3.0 * sigma + 1e-12
    return BoxCheck(expected=expected, observed=observed, sigma=sigma, within=within)


def sample_unweighted(weighted: WeightedTripartite, seed=0, *, boxes=100,
                      box_fraction=0.5) -> SampleResult:
    """Independent per-cell coin at each cell's weight.

    Cells draw from one counter-based stream in memory order, so the
    sampled graph is a pure function of (weights, seed). Weight-1
    cells are always present and weight-0 cells always absent. The
    report compares sampled against expected density on the full box
    and on ``boxes`` random sub-boxes holding a ``box_fraction`` of
    each part, with a three-sigma band from the exact Bernoulli-sum
    variance of each box.
    """
    w = weighted.weights
    u = generator(seed, "sample/cells").random(w.shape)
    dense = u < w
    graph = KPartiteHypergraph.from_dense(dense)

    full = _box_check(w, dense, tuple(np.arange(s) for s in w.shape))
    rng = generator(seed, "sample/boxes")
    checks = []
    for _ in range(int(boxes)):
        idx = tuple(
            np.sort(rng.choice(s, size=max(1, math.ceil(box_fraction * s)),
                               replace=False))
            for s in w.shape
        )
        checks.append(_box_check(w, dense, idx))
    n_within = sum(1 for c in checks if c.within)
    report = ConcentrationReport(
        full=full,
        boxes=tuple(checks),
        n_within=n_within,
        fraction_within=n_within / len(checks) if checks else 1.0,
    )
    return SampleResult(graph=graph, report=report)
