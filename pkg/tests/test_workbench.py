"""Flat-file formats, run manifests, and the CLI driver."""

import json
import os

import numpy as np
import pytest

from homopart import (
    InstanceSpec,
    KPartiteHypergraph,
    LayeredPartition,
    PartPartition,
    RunManifest,
    WeightedTripartite,
    file_digest,
    generate,
    homogeneity_audit,
    link,
    slicewise_vc,
)
from homopart import io as hio
from homopart.cli import main
from homopart.errors import FormatError
from homopart.oracles import FileOracle


def random_hypergraph(shape, seed):
    rng = np.random.default_rng(seed)
    return KPartiteHypergraph.from_dense(rng.random(shape) < 0.4)


# --- round trips ---------------------------------------------------------


def test_khg_round_trip(tmp_path):
    h = random_hypergraph((5, 7, 4), seed=0)
    path = tmp_path / "g.khg"
    hio.write_khg(path, h)
    assert hio.read_khg(path) == h


def test_khg_round_trip_bipartite(tmp_path):
    h = random_hypergraph((9, 6), seed=1)
    path = tmp_path / "g.khg"
    hio.write_khg(path, h)
    assert hio.read_khg(path) == h


def test_khg_empty_graph(tmp_path):
    h = KPartiteHypergraph.empty((3, 3, 3))
    path = tmp_path / "g.khg"
    hio.write_khg(path, h)
    assert hio.read_khg(path) == h


def test_w3g_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    w = rng.random((4, 6, 5))
    w[rng.random(w.shape) < 0.5] = 0.0
    path = tmp_path / "g.w3g"
    hio.write_w3g(path, WeightedTripartite(w))
    back = hio.read_w3g(path)
    # repr round-trips every float exactly
    assert np.array_equal(back.weights, w)


def test_part_round_trip_preserves_flags(tmp_path):
    layered = LayeredPartition([
        PartPartition([0, 1, 1, 2, 0, 2], part=0, n_blocks=4,
                      has_exceptional=True),
        PartPartition([1, 0, 1, 0], part=1, equitable=True),
        PartPartition([0, 0, 0], part=2),
    ])
    path = tmp_path / "p.part"
    hio.write_part(path, layered)
    back = hio.read_part(path)
    assert back.k == 3
    for a, b in zip(layered, back):
        assert a == b
        assert a.equitable == b.equitable
        assert a.n_blocks == b.n_blocks
        assert a.has_exceptional == b.has_exceptional


def test_part_reader_tolerates_missing_meta(tmp_path):
    path = tmp_path / "p.part"
    path.write_bytes(b"part 2\n0 0 1 1\n0 1 2\n")
    back = hio.read_part(path)
    assert back[0].part == 0
    assert back[1].part == 1
    assert back[1].n_blocks == 3


def test_audit_round_trip(tmp_path):
    inst = generate(InstanceSpec(
        k=3, n=(8, 8, 8), family="planted-boxes", r=2, eps_prime=0.1, seed=4,
    ))
    layered = LayeredPartition([inst.side_partitions[i] for i in range(3)])
    report = homogeneity_audit(inst.h, layered, 0.2)
    path = tmp_path / "r.audit"
    hio.write_audit(path, report)
    back = hio.read_audit(path)
    assert back == report


def test_audit_round_trip_failing_report(tmp_path):
    h = random_hypergraph((6, 6, 6), seed=5)
    flat = LayeredPartition([
        PartPartition(np.zeros(6, dtype=int), part=i) for i in range(3)
    ])
    report = homogeneity_audit(h, flat, 0.2)
    assert not report.passed
    path = tmp_path / "r.audit"
    hio.write_audit(path, report)
    assert hio.read_audit(path) == report


def test_links_round_trip(tmp_path):
    table = {
        ((), 0): PartPartition([0, 1, 0, 1], part=0, equitable=True),
        ((), 1): PartPartition([0, 0, 1, 1], part=1, equitable=True),
        (((0, 2), (1, 3)), 2): PartPartition(
            [1, 2, 0, 1, 2], n_blocks=3, has_exceptional=True,
        ),
    }
    path = tmp_path / "t.links"
    hio.write_links(path, table, 3)
    back, r = hio.read_links(path)
    assert r == 3
    assert set(back) == set(table)
    for key in table:
        assert back[key] == table[key]
        assert back[key].equitable == table[key].equitable
    # the loaded table drives FileOracle directly
    oracle = FileOracle(back, r)
    assert oracle.partition((), 0) == table[((), 0)]


def test_links_duplicate_key_rejected(tmp_path):
    path = tmp_path / "t.links"
    path.write_bytes(b"links 2\n- 0 1 0 0 - 0 0\n- 0 1 0 0 - 0 0\n")
    with pytest.raises(FormatError, match="duplicate"):
        hio.read_links(path)


def test_comments_skipped_everywhere(tmp_path):
    path = tmp_path / "g.khg"
    path.write_bytes(b"# preamble\nkhg 2 3 3\n# middle\n0 1\n2 2\n# end\n")
    h = hio.read_khg(path)
    assert h.has_edge((0, 1)) and h.has_edge((2, 2))
    assert int(h.to_dense().sum()) == 2


def test_digest_embedding(tmp_path):
    h = random_hypergraph((4, 4), seed=6)
    path = tmp_path / "g.khg"
    hio.write_khg(path, h, digest="abc123")
    assert hio.read_digest(path) == "abc123"
    assert hio.read_khg(path) == h

    bare = tmp_path / "bare.khg"
    hio.write_khg(bare, h)
    assert hio.read_digest(bare) is None


# --- format errors carry byte offsets ------------------------------------


def test_khg_bad_vertex_offset(tmp_path):
    path = tmp_path / "g.khg"
    path.write_bytes(b"khg 2 3 3\n0 0\n9 1\n")
    with pytest.raises(FormatError) as err:
        hio.read_khg(path)
    assert err.value.offset == 14
    assert "byte 14" in str(err.value)


def test_khg_bad_integer_offset(tmp_path):
    path = tmp_path / "g.khg"
    path.write_bytes(b"khg 2 3 3\n0 x\n")
    with pytest.raises(FormatError) as err:
        hio.read_khg(path)
    assert err.value.offset == 10


def test_khg_wrong_arity(tmp_path):
    path = tmp_path / "g.khg"
    path.write_bytes(b"khg 3 2 2 2\n0 0\n")
    with pytest.raises(FormatError, match="expected 3 fields"):
        hio.read_khg(path)


def test_non_ascii_byte_offset(tmp_path):
    path = tmp_path / "g.khg"
    path.write_bytes(b"khg 2 3 3\n0 \xff\n")
    with pytest.raises(FormatError) as err:
        hio.read_khg(path)
    assert err.value.offset == 12


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "g.khg"
    path.write_bytes(b"")
    with pytest.raises(FormatError, match="header"):
        hio.read_khg(path)


def test_w3g_weight_out_of_range(tmp_path):
    path = tmp_path / "g.w3g"
    path.write_bytes(b"w3g 2 2 2\n0 0 0 1.5\n")
    with pytest.raises(FormatError, match="outside"):
        hio.read_w3g(path)


def test_wrong_header_keyword(tmp_path):
    path = tmp_path / "g.w3g"
    path.write_bytes(b"khg 2 2 2\n")
    with pytest.raises(FormatError, match="w3g"):
        hio.read_w3g(path)


def test_part_count_mismatch(tmp_path):
    path = tmp_path / "p.part"
    path.write_bytes(b"part 3\n0 0\n1 1\n")
    with pytest.raises(FormatError, match="3 label lines"):
        hio.read_part(path)


# --- manifests ------------------------------------------------------------


def test_manifest_digest_ignores_timing_and_outputs():
    a = RunManifest(command="gen", params={"n": [6]}, seed=1, mode="-")
    b = RunManifest(command="gen", params={"n": [6]}, seed=1, mode="-",
                    outputs={"x": "00"}, timing=5.0)
    assert a.digest() == b.digest()
    c = RunManifest(command="gen", params={"n": [7]}, seed=1, mode="-")
    assert a.digest() != c.digest()
    d = RunManifest(command="gen", params={"n": [6]}, seed=2, mode="-")
    assert a.digest() != d.digest()


def test_manifest_round_trip(tmp_path):
    man = RunManifest(
        command="audit", params={"eps": 0.2}, seed=3, mode="practical",
        inputs={"instance": "ab"}, outputs={"report.audit": "cd"}, timing=0.5,
    )
    path = tmp_path / "manifest.json"
    man.write(path)
    back = RunManifest.read(path)
    assert back == man
    assert back.digest() == man.digest()


def test_manifest_tamper_detected(tmp_path):
    man = RunManifest(command="gen", params={}, seed=0, mode="-")
    path = tmp_path / "manifest.json"
    man.write(path)
    payload = json.loads(path.read_text())
    payload["seed"] = 9
    path.write_text(json.dumps(payload))
    with pytest.raises(ValueError, match="digest mismatch"):
        RunManifest.read(path)


def test_file_digest_matches_content(tmp_path):
    p1 = tmp_path / "a"
    p2 = tmp_path / "b"
    p1.write_bytes(b"same")
    p2.write_bytes(b"same")
    assert file_digest(p1) == file_digest(p2)
    p2.write_bytes(b"other")
    assert file_digest(p1) != file_digest(p2)


# --- generator examples ---------------------------------------------------


def test_product_instance_constant_third_axis():
    inst = generate(InstanceSpec(
        k=3, n=(60, 60, 60), family="product", r=3, eps_prime=0.1, seed=7,
    ))
    dense = inst.h.to_dense()
    base = link(inst.h, ((2, 0),)).to_dense()
    for c in range(60):
        assert np.array_equal(dense[:, :, c], base)
    # planted structure never exceeds r blocks per side
    assert inst.side_partitions[0].n_blocks <= 3
    assert inst.side_partitions[1].n_blocks <= 3
    assert inst.exact_links


def test_planted_instance_audits_clean():
    inst = generate(InstanceSpec(
        k=3, n=(24, 24, 24), family="planted-boxes", r=3, eps_prime=0.1,
        seed=11,
    ))
    layered = LayeredPartition([inst.side_partitions[i] for i in range(3)])
    report = homogeneity_audit(inst.h, layered, 0.2)
    assert report.passed
    assert report.mass == 0


def test_uniform_random_vc_grows():
    values = []
    for n in (6, 8, 10):
        inst = generate(InstanceSpec(
            k=3, n=(n, n, n), family="uniform-random", r=2, eps_prime=0.1,
            seed=0,
        ))
        values.append(slicewise_vc(inst.h)["max"])
    assert values == sorted(values)
    assert values[-1] > values[0]


# --- CLI ------------------------------------------------------------------


def run_cli(argv):
    return main([str(a) for a in argv])


def test_cli_gen_writes_instance_and_sidecar(tmp_path, capsys):
    out = tmp_path / "run"
    assert run_cli(["gen", "--family", "product", "--n", 60, "--seed", 7,
                    "--out", out]) == 0
    assert (out / "instance.khg").exists()
    assert (out / "instance.links").exists()
    man = RunManifest.read(out / "manifest.json")
    assert man.command == "gen"
    assert man.params["n"] == [60, 60, 60]
    # artifacts carry the manifest's core digest
    assert hio.read_digest(out / "instance.khg") == man.digest()
    assert hio.read_digest(out / "instance.links") == man.digest()
    assert man.outputs["instance.khg"] == file_digest(out / "instance.khg")


def test_cli_homogenize_passes_on_planted(tmp_path, capsys):
    gen_out = tmp_path / "gen"
    run_cli(["gen", "--family", "planted-boxes", "--n", 24, "--seed", 3,
             "--out", gen_out])
    hom_out = tmp_path / "hom"
    code = run_cli([
        "homogenize", gen_out / "instance.khg",
        "--links", gen_out / "instance.links",
        "--eps", 0.2, "--out", hom_out,
    ])
    assert code == 0
    assert (hom_out / "partition.part").exists()
    report = hio.read_audit(hom_out / "report.audit")
    assert report.passed
    text = capsys.readouterr().out
    assert "pass" in text
    # the emitted partition audits clean against the instance
    h = hio.read_khg(gen_out / "instance.khg")
    partition = hio.read_part(hom_out / "partition.part")
    assert homogeneity_audit(h, partition, 0.2).passed


def test_cli_audit_agrees_with_homogenize(tmp_path, capsys):
    gen_out = tmp_path / "gen"
    run_cli(["gen", "--family", "planted-boxes", "--n", 24, "--seed", 5,
             "--out", gen_out])
    hom_out = tmp_path / "hom"
    run_cli(["homogenize", gen_out / "instance.khg",
             "--links", gen_out / "instance.links", "--eps", 0.2,
             "--out", hom_out])
    audit_out = tmp_path / "audit"
    code = run_cli(["audit", gen_out / "instance.khg",
                    hom_out / "partition.part", "--eps", 0.2,
                    "--out", audit_out])
    assert code == 0
    assert hio.read_audit(audit_out / "report.audit") == \
        hio.read_audit(hom_out / "report.audit")


def test_cli_audit_failure_exits_one(tmp_path, capsys):
    h = random_hypergraph((6, 6, 6), seed=9)
    path = tmp_path / "g.khg"
    hio.write_khg(path, h)
    flat = LayeredPartition([
        PartPartition(np.zeros(6, dtype=int), part=i) for i in range(3)
    ])
    ppath = tmp_path / "p.part"
    hio.write_part(ppath, flat)
    code = run_cli(["audit", path, ppath, "--eps", 0.2,
                    "--out", tmp_path / "out"])
    assert code == 1
    report = hio.read_audit(tmp_path / "out" / "report.audit")
    assert not report.passed


def test_cli_vc_tripartite(tmp_path, capsys):
    gen_out = tmp_path / "gen"
    run_cli(["gen", "--family", "uniform-random", "--n", 8, "--seed", 0,
             "--out", gen_out])
    code = run_cli(["vc", gen_out / "instance.khg", "--out", tmp_path / "vc"])
    assert code == 0
    text = (tmp_path / "vc" / "vc.txt").read_text()
    assert text.startswith("vc 3\n")
    assert "max 3" in text


def test_cli_coverage_negative_control(tmp_path, capsys):
    gen_out = tmp_path / "gen"
    run_cli(["gen", "--family", "uniform-random", "--n", 10, "--seed", 3,
             "--out", gen_out])
    code = run_cli(["homogenize", gen_out / "instance.khg", "--eps", 0.2,
                    "--r", 2, "--max-anchors", 8, "--out", tmp_path / "hom"])
    assert code == 1
    err = capsys.readouterr().err
    assert "uncovered" in err
    # report names the actual uncovered mass
    assert any(tok.isdigit() and int(tok) > 0 for tok in err.split())


def test_cli_malformed_file_offset(tmp_path, capsys):
    path = tmp_path / "bad.khg"
    path.write_bytes(b"khg 3 4 4 4\n0 0 bad\n")
    code = run_cli(["homogenize", path, "--eps", 0.2,
                    "--out", tmp_path / "out"])
    assert code == 2
    assert "byte 12" in capsys.readouterr().err


def test_cli_usage_error(capsys):
    assert run_cli(["nosuch"]) == 2
    assert run_cli([]) == 2


def test_cli_infeasible_params(tmp_path, capsys):
    code = run_cli(["gowers", "build", "--toy", "--t", 3, "--n", 121,
                    "--out", tmp_path / "out"])
    assert code == 2
    assert "divisible" in capsys.readouterr().err


def test_cli_gowers_build_and_links(tmp_path, capsys):
    build_out = tmp_path / "build"
    flags = ["--toy", "--t", 3, "--n", 120, "--seed", 1]
    assert run_cli(["gowers", "build", *flags, "--out", build_out]) == 0
    weighted = hio.read_w3g(build_out / "gowers.w3g")
    assert weighted.weights.shape == (120, 120, 120)
    layering = hio.read_part(build_out / "layering.part")
    assert layering.block_counts() == (8, 8, 3)

    links_out = tmp_path / "links"
    assert run_cli(["gowers", "links", *flags, "--out", links_out]) == 0
    text = capsys.readouterr().out
    assert "n=360" in text
    assert "failures=0" in text
    assert "quasirandom" not in text  # every certificate is exact-kind
    table, _ = hio.read_links(links_out / "certificates.links")
    assert len(table) == 720  # two stored partitions per pinned vertex
    pins = {key[0] for key in table}
    assert len(pins) == 360


def test_cli_gowers_sample(tmp_path, capsys):
    out = tmp_path / "sample"
    code = run_cli(["gowers", "sample", "--toy", "--t", 2, "--n", 24,
                    "--seed", 2, "--out", out])
    assert code == 0
    sampled = hio.read_khg(out / "sampled.khg")
    assert sampled.part_sizes == (24, 24, 24)
    assert "full_within=True" in capsys.readouterr().out


def test_cli_gowers_cascade(tmp_path, capsys):
    out = tmp_path / "cascade"
    code = run_cli(["gowers", "cascade", "--toy", "--t", 2, "--n", 8,
                    "--seed", 0, "--out", out])
    assert code == 0
    text = (out / "cascade.txt").read_text()
    assert "witness" in text
    assert "level 1" in text


def test_cli_bench(tmp_path, capsys):
    out = tmp_path / "bench"
    code = run_cli(["bench", "--n", 12, "--families", "planted-boxes",
                    "--out", out])
    assert code == 0
    text = (out / "bench.txt").read_text()
    assert "planted-boxes 12" in text
    assert "pass" in text


# --- determinism ----------------------------------------------------------


def artifact_bytes(directory):
    out = {}
    for name in sorted(os.listdir(directory)):
        if name == "manifest.json":
            continue  # carries wall-clock timing
        out[name] = (directory / name).read_bytes()
    return out


def test_cli_rerun_byte_identical(tmp_path, monkeypatch):
    for threads, label in ((1, "a"), (4, "b")):
        monkeypatch.setenv("HOMOPART_THREADS", str(threads))
        gen_out = tmp_path / f"gen-{label}"
        run_cli(["gen", "--family", "planted-boxes", "--n", 24, "--seed", 5,
                 "--out", gen_out])
        run_cli(["homogenize", gen_out / "instance.khg",
                 "--links", gen_out / "instance.links", "--eps", 0.2,
                 "--out", tmp_path / f"hom-{label}"])
        run_cli(["gowers", "links", "--toy", "--t", 2, "--n", 24, "--seed", 1,
                 "--out", tmp_path / f"links-{label}"])
    for stage in ("gen", "hom", "links"):
        a = artifact_bytes(tmp_path / f"{stage}-a")
        b = artifact_bytes(tmp_path / f"{stage}-b")
        assert a == b, f"{stage} artifacts differ between thread counts"


def test_manifest_core_identical_across_reruns(tmp_path):
    for label in ("a", "b"):
        run_cli(["gen", "--family", "product", "--n", 12, "--seed", 2,
                 "--out", tmp_path / label])
    ma = RunManifest.read(tmp_path / "a" / "manifest.json")
    mb = RunManifest.read(tmp_path / "b" / "manifest.json")
    assert ma.digest() == mb.digest()
    assert ma.outputs == mb.outputs
