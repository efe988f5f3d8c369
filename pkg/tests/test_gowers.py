"""Tests for the tower-type construction module.

Oracles here rebuild the structures from their verbal descriptions:
the level graph from the two-complete-boxes picture (not the side
agreement formula the implementation uses), agreement counts from
per-pair loops, and the quasirandomness conditions from a powerset
sweep. Expected values frozen below were computed from those oracles
or by hand from the defining arithmetic.
"""

import dataclasses
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homopart import (
    LayeredPartition,
    PartPartition,
    build_sequence,
    build_weighted,
    coupling_threshold,
    growth_function,
    item2_margin,
    layer_count,
    level_graph,
    link_certificate,
    orthogonal_family,
    quasirandomness_audit,
    refinement_cascade,
    sample_unweighted,
    verify_certificate,
    verify_witness,
)
from homopart.errors import (
    DivisibilityError,
    FamilyRejectionError,
    InfeasibleParamsError,
)
from homopart.gowers import GowersParams


def brute_box_graph(n, family):
    """Level adjacency assembled box by box from the description."""
    m, M = family.m, family.M
    wc, wf = n // m, n // (m * M)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(m):
        for j in range(m):
            x_cols = set(np.flatnonzero(family.x_side[i]).tolist())
            x_rows = set(np.flatnonzero(family.x_side[j]).tolist())
            for k in range(M):
                for kp in range(M):
                    same_x = k in x_rows and kp in x_cols
                    same_y = k not in x_rows and kp not in x_cols
                    if not (same_x or same_y):
                        continue
                    rows = range(i * wc + k * wf, i * wc + (k + 1) * wf)
                    cols = range(j * wc + kp * wf, j * wc + (kp + 1) * wf)
                    for a in rows:
                        for b in cols:
                            adj[a, b] = True
    return adj


def brute_weights(layering):
    n, t = layering.n, layering.t
    w = np.zeros((n, n, n))
    width = n // t
    for r in range(1, t + 1):
        adj = brute_box_graph(n, layering.families[r - 1])
        for c in range((r - 1) * width, r * width):
            w[:, :, c] = np.where(adj, 2.0 ** -r, 0.0)
    return w


def brute_agreement(x_side, j, jp):
    return sum(1 for row in x_side if bool(row[j]) == bool(row[jp]))


def brute_quasirandom(adj, delta):
    """(cond1, violations, cond2, worst margin) by full enumeration."""
    adj = adj.astype(np.float64)
    n = adj.shape[0]
    d = adj.mean()
    degs = adj.sum(axis=0)
    violations = int(sum(1 for x in range(n) if abs(degs[x] - d * n) > delta ** 4 * n + 1e-9))
    cond1 = violations <= delta ** 4 * n / 8.0 + 1e-9
    codeg = adj.T @ adj
    min_size = max(1, math.ceil(delta * n - 1e-9))
    cond2, worst = True, -math.inf
    for size in range(min_size, n + 1):
        for combo in itertools.combinations(range(n), size):
            s = sum(codeg[x, y] - d * d * n for x in combo for y in combo)
            margin = s - (delta ** 3 / 2.0) * n * size * size
            worst = max(worst, margin)
            if margin >= 0.0:
                cond2 = False
    return cond1, violations, cond2, worst


@pytest.fixture(scope="module")
def toy_build():
    params = build_sequence(1e-18, 0.5, mode="toy", t=2, growth=2, s0=4, seed=11)
    return build_weighted(params, 8)


@pytest.fixture(scope="module")
def shallow_threshold_build():
    # s0 = 2 makes the top level cross the threshold, so its layer
    # vertices get quasirandom certificates
    params = build_sequence(1e-18, 0.5, mode="toy", t=2, growth=2, s0=2, seed=7)
    return build_weighted(params, 8)


@pytest.fixture(scope="module")
def wide_family():
    return orthogonal_family(120, 1000, seed=3)


class TestSequence:
    def test_threshold_and_growth_values(self):
        assert coupling_threshold(0.5) == 64
        assert growth_function(1) == 2
        assert growth_function(2) == 2
        assert growth_function(16) == 2
        assert growth_function(32) == 7

    def test_layer_count_values(self):
        assert layer_count(7.0 ** -20) == 2
        assert layer_count(7.0 ** -16) == 1
        assert layer_count(1e-4) < 1

    def test_paper_sequence(self):
        params = build_sequence(7.0 ** -20, 7.0 ** -20)
        assert params.t == 2
        assert params.levels == (1, 2, 4)
        assert params.relaxations == ()
        assert params.mode == "paper"
        assert params.ratio(1) == 2 and params.ratio(2) == 2

    def test_paper_eps_too_large_recommends_toy(self):
        with pytest.raises(InfeasibleParamsError, match="toy"):
            build_sequence(1e-4, 1e-5)

    def test_paper_rejects_overrides(self):
        with pytest.raises(ValueError, match="paper mode"):
            build_sequence(7.0 ** -20, 7.0 ** -20, t=3)

    def test_paper_needs_delta_below_eps(self):
        with pytest.raises(ValueError, match="delta <= eps"):
            build_sequence(7.0 ** -20, 0.5)

    def test_toy_requires_t_and_growth(self):
        with pytest.raises(ValueError, match="explicit t and growth"):
            build_sequence(0.1, 0.5, mode="toy")

    def test_toy_relaxations_stamped(self):
        full = build_sequence(1e-18, 0.5, mode="toy", t=2, growth=2, s0=4)
        assert full.relaxations == ("t", "growth", "s0", "delta-coupling")
        minimal = build_sequence(0.3, 0.2, mode="toy", t=1, growth=2)
        assert minimal.relaxations == ("t", "growth")

    def test_branch_rule_stunts_growth(self):
        # growth would jump past s0 = 3 from m = 1, so the first step
        # is clamped to s0; the second step is free again
        params = build_sequence(1e-18, 0.5, mode="toy", t=2, growth=5, s0=3)
        assert params.levels == (1, 3, 15)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            GowersParams(eps=0.1, delta=0.1, mode="toy", t=1, s0=4,
                         levels=(1, 3, 4), seed=0)
        with pytest.raises(ValueError):
            GowersParams(eps=0.1, delta=0.1, mode="paper", t=1, s0=4,
                         levels=(2, 4), seed=0)

    @given(ratio=st.integers(2, 5), t=st.integers(1, 4))
    def test_toy_levels_multiply(self, ratio, t):
        params = build_sequence(0.3, 0.3, mode="toy", t=t, growth=ratio, s0=max(ratio, 2))
        for r in range(1, t + 1):
            assert params.levels[r] % params.levels[r - 1] == 0
            assert params.ratio(r) <= max(ratio, params.s0)


class TestOrthogonalFamily:
    def test_trivial_split(self):
        fam = orthogonal_family(1, 2, seed=0)
        assert int(fam.x_side.sum()) == 1
        assert fam.z_counts[0, 1] == 0
        assert not fam.item1_checked

    def test_band_example(self, wide_family):
        fam = wide_family
        assert fam.attempts == 1
        # the size gate ln^3(4 m^2) sits above M here, so the bands are
        # not part of acceptance; they still hold for this draw
        assert not fam.item1_checked
        sizes = np.einsum("ij->i", fam.x_side.astype(np.int64))
        assert sizes.min() >= 400 and sizes.max() <= 600
        s = fam.x_side.astype(np.float64)
        off = ~np.eye(fam.m, dtype=bool)
        for left, right in ((s, s), (s, 1 - s), (1 - s, 1 - s)):
            inter = np.einsum("ik,jk->ij", left, right)[off]
            assert inter.min() >= 150 and inter.max() <= 350

    def test_band_example_spot_checks(self, wide_family):
        fam = wide_family
        rng = np.random.default_rng(0)
        for _ in range(50):
            i, j = rng.choice(fam.m, size=2, replace=False)
            xi = set(np.flatnonzero(fam.x_side[i]).tolist())
            xj = set(np.flatnonzero(fam.x_side[j]).tolist())
            assert 150 <= len(xi & xj) <= 350
            assert 150 <= len(xi - xj) <= 350

    def test_gated_item1(self):
        fam = orthogonal_family(150, 2000, seed=1)
        assert fam.item1_checked
        assert fam.attempts <= 4
        sizes = fam.x_side.sum(axis=1)
        band = 2000 ** (2.0 / 3.0)
        assert np.all(np.abs(sizes - 1000.0) <= band)

    def test_agreement_counts_match_brute(self):
        fam = orthogonal_family(6, 3, seed=5, max_attempts=256)
        for j in range(3):
            for jp in range(3):
                assert fam.z_counts[j, jp] == brute_agreement(fam.x_side, j, jp)
        off = fam.z_counts[~np.eye(3, dtype=bool)]
        assert off.max() <= 0.75 * 6

    def test_infeasible_pair_raises(self):
        # the agreement cap needs roughly M <= e^(m/16); this pair sits
        # far outside, so every attempt fails
        with pytest.raises(FamilyRejectionError) as info:
            orthogonal_family(30, 2000, seed=1, max_attempts=3)
        err = info.value
        assert err.attempts == 3
        assert err.stats["agreement_violations"] > 0
        assert "3 attempts" in str(err)

    def test_determinism(self):
        a = orthogonal_family(4, 2, seed=9)
        b = orthogonal_family(4, 2, seed=9)
        assert np.array_equal(a.x_side, b.x_side)
        assert a.attempts == b.attempts

    def test_validation(self):
        with pytest.raises(ValueError):
            orthogonal_family(0, 4)
        with pytest.raises(ValueError):
            orthogonal_family(3, 1)

    @settings(deadline=None, max_examples=25)
    @given(m=st.integers(1, 5), seed=st.integers(0, 10 ** 6))
    def test_accepted_families_satisfy_event(self, m, seed):
        fam = orthogonal_family(m, 2, seed=seed, max_attempts=256)
        for j, jp in itertools.permutations(range(2), 2):
            z = brute_agreement(fam.x_side, j, jp)
            assert z == fam.z_counts[j, jp]
            assert z <= 0.75 * m


class TestItem2Margin:
    def test_uniform_all_qualify(self, wide_family):
        lam = np.full(1000, 1e-3)
        rep = item2_margin(wide_family, lam, 0.02, 0.5, 0.05)
        assert rep.count == 120
        assert rep.hypothesis_ok and rep.satisfied
        sizes = wide_family.x_side.sum(axis=1)
        expect = np.minimum(sizes, 1000 - sizes) / 1000.0
        assert rep.mins == pytest.approx(expect)

    def test_concentrated_extremal_arithmetic(self, wide_family):
        for zeta in (0.1, 0.3, 0.5):
            lam = np.zeros(1000)
            lam[0], lam[1] = 1.0 - zeta, zeta
            assert float((lam ** 2).sum()) == pytest.approx(1 - 2 * zeta + 2 * zeta ** 2)
            rep = item2_margin(wide_family, lam, 0.02, zeta, 0.01)
            assert rep.count >= 0

    def test_boundary_concentration_meets_guarantee(self, wide_family):
        lam = np.zeros(1000)
        lam[0] = lam[1] = 0.5
        rep = item2_margin(wide_family, lam, 0.02, 0.5, 0.05)
        assert rep.hypothesis_ok
        assert rep.count >= 0.05 * 120

    def test_degenerate_weight_flagged(self, wide_family):
        lam = np.zeros(1000)
        lam[0] = 1.0
        rep = item2_margin(wide_family, lam, 0.02, 0.5, 0.05)
        assert not rep.hypothesis_ok
        assert any("max weight" in p for p in rep.problems)
        assert rep.count == 0

    def test_zeta_above_half_flagged(self, wide_family):
        lam = np.full(1000, 1e-3)
        rep = item2_margin(wide_family, lam, 0.02, 0.6, 0.05)
        assert any("zeta" in p for p in rep.problems)

    def test_validation(self, wide_family):
        with pytest.raises(ValueError, match="length"):
            item2_margin(wide_family, np.full(5, 0.2), 0.02, 0.5, 0.05)
        bad = np.full(1000, 1e-3)
        bad[0] = -1e-3
        bad[1] = 3e-3
        with pytest.raises(ValueError, match="nonnegative"):
            item2_margin(wide_family, bad, 0.02, 0.5, 0.05)
        with pytest.raises(ValueError, match="sum to 1"):
            item2_margin(wide_family, np.full(1000, 2e-3), 0.02, 0.5, 0.05)

    def test_guarantee_over_random_admissible_vectors(self, wide_family):
        rng = np.random.default_rng(4)
        zeta, eta, eps = 0.5, 0.05, 0.02
        for _ in range(25):
            lam = rng.dirichlet(np.full(1000, 0.3))
            while lam.max() > 1.0 - zeta:
                lam = 0.5 * lam + 0.5 / 1000.0
            rep = item2_margin(wide_family, lam, eps, zeta, eta)
            assert rep.hypothesis_ok
            assert rep.count >= eta * 120 - 1e-9


class TestBuildWeighted:
    def test_weights_match_box_oracle(self, toy_build):
        assert np.array_equal(toy_build.weighted.weights,
                              brute_weights(toy_build.layering))

    def test_weight_support_per_layer(self, toy_build):
        w = toy_build.weighted.weights
        layering = toy_build.layering
        for c in range(8):
            r = layering.layer_of(c)
            vals = set(np.unique(w[:, :, c]).tolist())
            assert vals <= {0.0, 2.0 ** -r}

    def test_weights_range(self, toy_build):
        w = toy_build.weighted.weights
        assert w.min() >= 0.0 and w.max() <= 1.0

    def test_per_box_edge_counts(self, toy_build):
        # per coarse pair the level graph holds exactly the two
        # complete boxes, nothing else
        n = toy_build.n
        for r in (1, 2):
            fam = toy_build.layering.families[r - 1]
            adj = toy_build.layering.graphs[r - 1].to_dense()
            m, M = fam.m, fam.M
            wc, wf = n // m, n // (m * M)
            for i in range(m):
                for j in range(m):
                    count = int(adj[i * wc:(i + 1) * wc, j * wc:(j + 1) * wc].sum())
                    xi = int(fam.x_side[i].sum())
                    xj = int(fam.x_side[j].sum())
                    assert count == (xi * xj + (M - xi) * (M - xj)) * wf * wf

    def test_layering_structure(self, toy_build):
        lay = toy_build.layering
        assert lay.t == 2
        for r, m in enumerate(lay.levels):
            assert lay.a_levels[r].n_blocks == m
            assert np.all(lay.a_levels[r].sizes() == 8 // m)
        assert np.all(lay.c_layers.sizes() == 4)
        assert lay.layer_of(0) == 1 and lay.layer_of(7) == 2
        assert np.array_equal(lay.layer_indices(2), np.arange(4, 8))

    def test_divisibility_errors(self):
        params = build_sequence(1e-18, 0.5, mode="toy", t=2, growth=2, s0=4)
        with pytest.raises(DivisibilityError, match="finest level"):
            build_weighted(params, 10)
        three = build_sequence(1e-18, 0.5, mode="toy", t=3, growth=2, s0=4)
        with pytest.raises(DivisibilityError, match="layers"):
            build_weighted(three, 16)

    def test_determinism_and_seed_sensitivity(self):
        params = build_sequence(1e-18, 0.5, mode="toy", t=2, growth=2, s0=4, seed=11)
        a = build_weighted(params, 8)
        b = build_weighted(params, 8)
        assert np.array_equal(a.weighted.weights, b.weighted.weights)
        other = build_sequence(1e-18, 0.5, mode="toy", t=2, growth=2, s0=4, seed=12)
        c = build_weighted(other, 8)
        assert not np.array_equal(a.weighted.weights, c.weighted.weights)

    def test_level_graph_standalone(self, toy_build):
        fam = toy_build.layering.families[0]
        g = level_graph(8, fam)
        assert np.array_equal(g.to_dense(), toy_build.layering.graphs[0].to_dense())
        with pytest.raises(DivisibilityError):
            level_graph(9, fam)

    def test_deep_level_density_near_half(self, shallow_threshold_build):
        # past the coupling threshold the level graph density sits at
        # 1/2 up to toy-scale fluctuation
        g = shallow_threshold_build.layering.graphs[1]
        d = g.to_dense().mean()
        assert abs(d - 0.5) <= 0.15


class TestLinkCertificate:
    def test_shallow_c_vertex_constant_boxes(self, toy_build):
        for v, want_level, want_blocks in ((0, 1, 2), (7, 2, 4)):
            cert = link_certificate(toy_build, 2, v)
            assert cert.kind == "constant-boxes"
            assert cert.level == want_level
            assert [p.n_blocks for p in cert.partitions] == [want_blocks] * 2
            check = verify_certificate(toy_build, cert)
            assert check.ok and check.exact and check.worst is None

    def test_certified_values_are_dyadic(self, toy_build):
        w = toy_build.weighted.weights
        cert = link_certificate(toy_build, 2, 5)
        link = w[:, :, 5]
        r = cert.level
        for a in range(cert.partitions[0].n_blocks):
            ai = cert.partitions[0].block_indices(a)
            for b in range(cert.partitions[1].n_blocks):
                bi = cert.partitions[1].block_indices(b)
                sub = link[np.ix_(ai, bi)]
                assert sub.min() == sub.max()
                assert sub.min() in (0.0, 2.0 ** -r)

    def test_deep_c_vertex_quasirandom(self, shallow_threshold_build):
        cert = link_certificate(shallow_threshold_build, 2, 7)
        assert cert.kind == "quasirandom"
        assert cert.level == 2
        assert all(p.n_blocks == 1 for p in cert.partitions)
        check = verify_certificate(shallow_threshold_build, cert)
        # one-sided semantics: pass means no witness within budget
        assert check.ok and not check.exact
        assert check.witness is None
        assert check.audit is not None

    def test_ab_vertex_layer_constant(self, toy_build):
        w = toy_build.weighted.weights
        for part, v in ((0, 3), (1, 5)):
            cert = link_certificate(toy_build, part, v)
            assert cert.kind == "layer-constant"
            assert cert.partitions[0].n_blocks <= 2 ** 2
            assert cert.partitions[1].n_blocks == 2
            check = verify_certificate(toy_build, cert)
            assert check.ok and check.exact
            link = w[v] if part == 0 else w[:, v, :]
            for a in range(cert.partitions[0].n_blocks):
                ai = cert.partitions[0].block_indices(a)
                for b in range(cert.partitions[1].n_blocks):
                    bi = cert.partitions[1].block_indices(b)
                    sub = link[np.ix_(ai, bi)]
                    assert sub.min() == sub.max()
                    assert sub.min() in (0.0, 0.5, 0.25)

    def test_atom_bound_three_layers(self):
        params = build_sequence(1e-18, 0.5, mode="toy", t=3, growth=2, s0=4, seed=2)
        build = build_weighted(params, 24)
        cert = link_certificate(build, 0, 11)
        assert cert.kind == "layer-constant"
        assert cert.partitions[0].n_blocks <= 8
        assert cert.size_bound == 8
        assert verify_certificate(build, cert).ok

    def test_threshold_square_bound_arithmetic(self):
        assert coupling_threshold(0.5) ** 2 == 4096
        assert 4096 <= 17 / 0.5 ** 8 == 4352

    def test_size_bound_fields(self, toy_build):
        cert = link_certificate(toy_build, 2, 7)
        assert cert.size_bound == 16
        assert cert.partitions[0].n_blocks <= cert.size_bound

    def test_validation(self, toy_build):
        with pytest.raises(ValueError):
            link_certificate(toy_build, 3, 0)
        with pytest.raises(ValueError):
            link_certificate(toy_build, 0, 99)

    def test_tampered_certificate_fails(self, toy_build):
        cert = link_certificate(toy_build, 2, 0)
        coarse = LayeredPartition([PartPartition.trivial(8), PartPartition.trivial(8)])
        fake = dataclasses.replace(cert, partitions=coarse)
        check = verify_certificate(toy_build, fake)
        assert not check.ok
        assert check.worst is not None


class TestQuasirandomnessAudit:
    def test_complete_graph_passes(self):
        rep = quasirandomness_audit(np.ones((8, 8), dtype=bool), 0.5)
        assert rep.condition1 and rep.degree_violations == 0
        assert rep.condition2 and rep.condition2_worst < 0
        assert rep.condition2_mode == "exact"

    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("delta", [0.3, 0.5])
    def test_exact_mode_matches_brute(self, seed, delta):
        rng = np.random.default_rng(seed)
        adj = rng.random((8, 8)) < 0.5
        rep = quasirandomness_audit(adj, delta)
        c1, violations, c2, worst = brute_quasirandom(adj, delta)
        assert rep.condition1 == c1
        assert rep.degree_violations == violations
        assert rep.condition2 == c2
        assert rep.condition2_worst == pytest.approx(worst)

    def test_requires_intervals_past_exact_range(self):
        with pytest.raises(ValueError, match="intervals"):
            quasirandomness_audit(np.ones((24, 24), dtype=bool), 0.5)

    def test_statistic_mode_complete(self):
        rep = quasirandomness_audit(
            np.ones((32, 32), dtype=bool), 0.7,
            b_intervals=PartPartition.intervals(32, 32, part=1),
        )
        assert rep.condition2_mode == "statistic"
        assert rep.condition1 and rep.condition2

    def test_statistic_same_interval_gate(self):
        # too few intervals: the same-interval mass cannot be absorbed,
        # so the sufficient statistic stays inconclusive
        rep = quasirandomness_audit(
            np.ones((32, 32), dtype=bool), 0.5,
            b_intervals=PartPartition.intervals(32, 8, part=1),
        )
        assert not rep.condition2

    def test_band_example_wide_level(self):
        # a 64x64 family is the smallest with comfortable acceptance;
        # bands at M^(-1/3) = 1/4 hold with lots of room
        fam = orthogonal_family(64, 64, seed=0)
        assert fam.attempts == 1
        g = level_graph(4096, fam)
        rep = quasirandomness_audit(
            g, 0.5,
            b_intervals=PartPartition.intervals(4096, 64, part=1),
            level_M=64,
        )
        assert rep.condition1 and rep.degree_violations == 0
        assert rep.degree_band and rep.codegree_band
        assert abs(rep.density - 0.5) <= 0.5 ** 4 / 2
        # the pointwise codegree statistic is calibrated for much
        # larger M and legitimately stays inconclusive here
        assert rep.condition2_mode == "statistic"
        assert not rep.condition2

    def test_degenerate_column_fails_condition1(self):
        adj = np.zeros((12, 12), dtype=bool)
        adj[:, 0] = True
        rep = quasirandomness_audit(adj, 0.5)
        assert not rep.condition1

    def test_band_reporting_controls(self):
        adj = np.ones((8, 8), dtype=bool)
        plain = quasirandomness_audit(adj, 0.5)
        assert plain.degree_band is None and plain.codegree_band is None
        forced = quasirandomness_audit(
            adj, 0.5, b_intervals=PartPartition.intervals(8, 4, part=1),
            level_M=2, band_tol=1.0,
        )
        assert forced.degree_band and forced.codegree_band

    def test_rectangular_rejected(self):
        with pytest.raises(ValueError):
            quasirandomness_audit(np.ones((4, 6), dtype=bool), 0.5)


def _trivial_candidate(n):
    return LayeredPartition([
        PartPartition.trivial(n, part=0),
        PartPartition.trivial(n, part=1),
        PartPartition.trivial(n, part=2),
    ])


class TestRefinementCascade:
    def test_exact_candidate_zero_refines(self, toy_build):
        candidate = LayeredPartition([
            PartPartition.intervals(8, 4, part=0),
            PartPartition.intervals(8, 4, part=1),
            PartPartition.intervals(8, 4, part=2),
        ])
        rep = refinement_cascade(toy_build, candidate)
        assert [level.refines for level in rep.levels] == [True, True]
        assert all(not level.witnesses for level in rep.levels)

    def test_trivial_candidate_level1_witness(self, toy_build):
        rep = refinement_cascade(toy_build, _trivial_candidate(8))
        first = rep.first_failure()
        assert first.r == 1
        wit = first.witnesses[0]
        assert wit.level == 1
        assert wit.complete.sub_density == 0.5
        assert wit.empty.sub_density == 0.0
        assert wit.gap == 2.0 ** -1
        assert wit.gap >= 2.0 ** -toy_build.params.t
        assert [len(s) for s in wit.complete.subsets] == [4, 4, 4]

    def test_witness_reverifies_through_auditor(self, toy_build):
        rep = refinement_cascade(toy_build, _trivial_candidate(8))
        wit = rep.first_failure().witnesses[0]
        assert verify_witness(toy_build.weighted, wit.complete) == wit.complete.sub_density
        assert verify_witness(toy_build.weighted, wit.empty) == wit.empty.sub_density
        assert wit.complete.base_density == 0.1875
        assert wit.search is not None
        assert wit.search.deviation > 0.0

    def test_witness_respects_blocks(self, toy_build):
        rep = refinement_cascade(toy_build, _trivial_candidate(8))
        wit = rep.first_failure().witnesses[0]
        layer = toy_build.layering.layer_indices(wit.level)
        assert set(wit.complete.subsets[2].tolist()) <= set(layer.tolist())
        assert set(wit.complete.subsets[0].tolist()) <= set(range(8))
        # complete and empty share the second-part subset
        assert np.array_equal(wit.complete.subsets[1], wit.empty.subsets[1])

    def test_beta_schedule_documents_eps_requirement(self, toy_build):
        rep = refinement_cascade(toy_build, _trivial_candidate(8), eps=1e-4)
        level2 = rep.levels[1]
        assert level2.beta == pytest.approx(4.9)
        assert not level2.valid and not level2.runnable
        assert level2.refines is None
        assert not rep.levels[0].runnable  # beta_1 = 0.7 already too big

    def test_beta_flags_with_tiny_eps(self, toy_build):
        rep = refinement_cascade(toy_build, _trivial_candidate(8))
        assert all(level.valid and level.runnable for level in rep.levels)
        assert rep.betas[0] == pytest.approx(1e-18 ** 0.25)

    def test_factor_two_precondition(self, toy_build):
        skew = LayeredPartition([
            PartPartition(np.array([0, 1, 1, 1, 1, 1, 1, 1]), part=0),
            PartPartition.trivial(8, part=1),
            PartPartition.trivial(8, part=2),
        ])
        with pytest.raises(ValueError, match="factor of two"):
            refinement_cascade(toy_build, skew)

    def test_empty_blocks_tolerated(self, toy_build):
        halves = np.repeat([0, 1], 4)
        padded = LayeredPartition([
            PartPartition(halves, part=0, n_blocks=3),
            PartPartition(halves, part=1),
            PartPartition(halves, part=2),
        ])
        rep = refinement_cascade(toy_build, padded)
        assert rep.levels[0].runnable

    def test_candidate_shape_validation(self, toy_build):
        with pytest.raises(ValueError, match="three-part"):
            refinement_cascade(toy_build, LayeredPartition(
                [PartPartition.trivial(8), PartPartition.trivial(8)]))
        with pytest.raises(ValueError, match="cover"):
            refinement_cascade(toy_build, _trivial_candidate(12))


class TestSampleUnweighted:
    def test_degenerate_weights(self):
        from homopart import WeightedTripartite
        w = np.zeros((2, 2, 2))
        w[0, 0, 0] = 1.0
        for seed in range(5):
            result = sample_unweighted(WeightedTripartite(w), seed=seed, boxes=3)
            dense = result.graph.to_dense()
            assert dense[0, 0, 0]
            assert dense.sum() == 1

    def test_full_box_and_subboxes_within_band(self):
        params = build_sequence(1e-18, 0.5, mode="toy", t=2, growth=2, s0=4, seed=11)
        build = build_weighted(params, 60)
        for seed in (0, 1, 2):
            result = sample_unweighted(build.weighted, seed=seed, boxes=100)
            assert result.report.full.within
            assert result.report.n_within >= 97
            assert result.report.fraction_within == result.report.n_within / 100

    def test_determinism(self, toy_build):
        a = sample_unweighted(toy_build.weighted, seed=3, boxes=10)
        b = sample_unweighted(toy_build.weighted, seed=3, boxes=10)
        assert np.array_equal(a.graph.to_dense(), b.graph.to_dense())
        assert a.report == b.report
        c = sample_unweighted(toy_build.weighted, seed=4, boxes=10)
        assert not np.array_equal(a.graph.to_dense(), c.graph.to_dense())

    def test_constant_half_weights(self):
        from homopart import WeightedTripartite
        w = np.full((6, 6, 6), 0.5)
        result = sample_unweighted(WeightedTripartite(w), seed=1, boxes=20)
        rep = result.report.full
        assert rep.expected == 0.5
        assert rep.sigma == pytest.approx(math.sqrt(216 * 0.25) / 216)
        assert rep.within
