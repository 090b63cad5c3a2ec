import json

import pytest

from dynppr.cli import _parse_eps, main
from dynppr.gallery import random_digraph
from dynppr.graph import load_edge_list, write_edge_list
from dynppr.harness import CSV_COLUMNS, WALL_TIME_COLUMNS, read_rows_csv
from dynppr.perturb import PerturbPlan

WALL_IDX = [CSV_COLUMNS.index(c) for c in WALL_TIME_COLUMNS]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "web.edges"
    write_edge_list(path, random_digraph(250, 5.0, seed=11))
    return str(path)


def _update_args(dataset, out, extra=()):
    return ["update", "--dataset", dataset, "--insert-nodes", "2",
            "--delete-nodes", "2", "--insert-edge-frac", "0.02",
            "--delete-edge-frac", "0.02", "--seed", "3", "--sources", "4",
            "--eps", "1e-6,per_edge=1e-7", "--benchmark-eps", "1e-8",
            "--out", str(out), *extra]


def test_parse_eps_tokens():
    assert _parse_eps("1e-8,per_edge=1e-9") == (1e-8, {"per_edge": 1e-9})
    assert _parse_eps("per_edge=1e-9") == (None, {"per_edge": 1e-9})
    assert _parse_eps(" 1e-6 ") == (1e-6, {})


def test_gen_writes_evolution_files(dataset, tmp_path, capsys):
    out = tmp_path / "evo"
    rc = main(["gen", "--dataset", dataset, "--insert-nodes", "3",
               "--delete-nodes", "2", "--insert-edge-frac", "0.05",
               "--delete-edge-frac", "0.05", "--seed", "9",
               "--out", str(out)])
    assert rc == 0
    for name in ("plan.json", "batch.txt", "original.edges", "updated.edges"):
        assert (out / name).exists()
    plan = PerturbPlan.read(out / "plan.json")
    assert plan == PerturbPlan(3, 2, 0.05, 0.05, rng_seed=9)
    original = load_edge_list(out / "original.edges")
    updated = load_edge_list(out / "updated.edges")
    # 3 arrivals in, 2 departures out
    assert updated.node_count == original.node_count + 1
    assert "batch:" in capsys.readouterr().out


def test_gen_plan_file_overrides_inline(dataset, tmp_path):
    plan_path = tmp_path / "plan.json"
    PerturbPlan(insert_edge_fraction=0.1, rng_seed=5).write(plan_path)
    out = tmp_path / "evo"
    rc = main(["gen", "--dataset", dataset, "--plan", str(plan_path),
               "--insert-nodes", "99", "--out", str(out)])
    assert rc == 0
    assert PerturbPlan.read(out / "plan.json") == \
        PerturbPlan(insert_edge_fraction=0.1, rng_seed=5)


def test_update_writes_report_and_summary(dataset, tmp_path, capsys):
    out = tmp_path / "runs"
    rc = main(_update_args(dataset, out))
    assert rc == 0
    rows = read_rows_csv(out / "report.csv")
    assert len(rows) == 3 * 4
    assert {r.method for r in rows} == {"vwppr", "per_edge", "from_scratch"}
    assert {r.epsilon for r in rows if r.method == "per_edge"} == {1e-7}
    assert {r.epsilon for r in rows if r.method == "vwppr"} == {1e-6}
    summary = json.loads((out / "summary.json").read_text())
    assert summary["source_count"] == 4
    stdout = capsys.readouterr().out
    assert "per_edge" in stdout and "report.csv" in stdout


def test_update_exact_correction_renames_method(dataset, tmp_path):
    out = tmp_path / "runs"
    rc = main(_update_args(dataset, out, extra=[
        "--methods", "vwppr,from_scratch", "--exact-correction"]))
    assert rc == 0
    rows = read_rows_csv(out / "report.csv")
    assert {r.method for r in rows} == {"vwppr_exact", "from_scratch"}


def test_update_runs_repeat_byte_identical_but_wall_time(dataset, tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(_update_args(dataset, out)) == 0
        outs.append((out / "report.csv").read_text().splitlines())
    assert len(outs[0]) == len(outs[1])
    assert outs[0][0] == outs[1][0]  # header
    for la, lb in zip(outs[0][1:], outs[1][1:]):
        fa, fb = la.split(","), lb.split(",")
        for i in range(len(CSV_COLUMNS)):
            if i not in WALL_IDX:
                assert fa[i] == fb[i]


def test_prior_precomputes_cache(dataset, tmp_path, capsys):
    out = tmp_path / "runs"
    rc = main(["prior", "--dataset", dataset, "--insert-edge-frac", "0.02",
               "--delete-edge-frac", "0.02", "--seed", "3", "--sources", "3",
               "--eps", "1e-6", "--benchmark-eps", "1e-8", "--out", str(out)])
    assert rc == 0
    assert "cached 3 priors and 3 benchmarks" in capsys.readouterr().out
    assert len(list((out / "prior_cache").glob("*.npz"))) == 6


def test_report_recomputes_summary(dataset, tmp_path, capsys):
    out = tmp_path / "runs"
    main(_update_args(dataset, out))
    capsys.readouterr()
    again = tmp_path / "summary2.json"
    rc = main(["report", "--rows", str(out / "report.csv"),
               "--out", str(again)])
    assert rc == 0
    recomputed = json.loads(again.read_text())
    original = json.loads((out / "summary.json").read_text())
    assert recomputed["methods"] == original["methods"]
    assert recomputed["rows"] == original["rows"]
    assert "alpha" not in recomputed  # experiment extras are not recoverable


def test_verify_small_passes(capsys):
    rc = main(["verify", "--scale", "small"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "7/7 checks passed" in out
    assert out.count("[PASS]") == 7


def test_cli_reports_package_errors_as_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.edges"
    bad.write_text("0 1\nx y\n")
    rc = main(["gen", "--dataset", str(bad), "--out", str(tmp_path / "o")])
    assert rc == 2
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "line 2" in err


def test_cli_rejects_unknown_scale():
    with pytest.raises(SystemExit):
        main(["verify", "--scale", "galactic"])
