"""Scenario loading, execution, artifact determinism, and the CLI driver."""

from pathlib import Path

import pytest

from ufchains.cli import main
from ufchains.errors import ScenarioError
from ufchains.scenario import load_scenario, run_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

EXPECTED_EXIT = {
    "fundamental-line": 0,
    "alternating-trivial": 0,
    "squares-nontrivial": 0,
    "even-doubled-seminorm": 0,
    "shifted-even-seminorm": 0,
    "squares-mean": 0,
    "doubling-tree-bilip": 0,
    "evens-inclusion-bilip": 0,
    "three-step-prism": 0,
    "line-shape-reindex": 0,
    "line-profile": 0,
}


def test_every_committed_scenario_runs_clean(tmp_path):
    paths = sorted(SCENARIOS.glob("*.toml"))
    assert {p.stem for p in paths} == set(EXPECTED_EXIT)
    for p in paths:
        res = run_scenario(load_scenario(p), out_root=tmp_path)
        assert res.exit_code == EXPECTED_EXIT[res.name], (res.name, res.summary)
        assert res.outputs


def test_squares_scenario_capacities_grow(tmp_path):
    res = run_scenario(
        load_scenario(SCENARIOS / "squares-nontrivial.toml"), out_root=tmp_path
    )
    assert res.exit_code == 0
    rows = (tmp_path / "squares-nontrivial" / "verdict.tsv").read_text().splitlines()
    assert rows[0] == "window_radius\tc_min\tverdict\twitness_size"
    got = [tuple(line.split("\t")[:3]) for line in rows[1:]]
    assert got == [
        ("50", "9/2", "NONTRIVIAL"),
        ("200", "19/2", "NONTRIVIAL"),
        ("450", "29/2", "NONTRIVIAL"),
    ]
    assert (tmp_path / "squares-nontrivial" / "witness_cut.tsv").exists()


def test_mean_scenario_values(tmp_path):
    res = run_scenario(
        load_scenario(SCENARIOS / "squares-mean.toml"), out_root=tmp_path
    )
    assert res.exit_code == 0
    rows = (tmp_path / "squares-mean" / "mean.tsv").read_text().splitlines()
    assert rows == [
        "n\tset_size\tmean",
        "100\t201\t11/201",
        "200\t401\t15/401",
        "400\t801\t7/267",
    ]


def test_doubling_tree_bilip_emits_matching(tmp_path):
    res = run_scenario(
        load_scenario(SCENARIOS / "doubling-tree-bilip.toml"), out_root=tmp_path
    )
    assert res.exit_code == 0
    assert "matching.tsv" in res.outputs
    lines = (tmp_path / "doubling-tree-bilip" / "matching.tsv").read_text().splitlines()
    assert lines[0] == "source\ttarget"
    assert len(lines) > 1


def test_rerun_is_byte_identical(tmp_path):
    names = ["fundamental-line", "alternating-trivial", "three-step-prism",
             "line-shape-reindex"]
    for name in names:
        sc = load_scenario(SCENARIOS / f"{name}.toml")
        a = run_scenario(sc, out_root=tmp_path / "a")
        b = run_scenario(sc, out_root=tmp_path / "b")
        assert a.outputs == b.outputs
        for rel in a.outputs:
            fa = (tmp_path / "a" / name / rel).read_bytes()
            fb = (tmp_path / "b" / name / rel).read_bytes()
            assert fa == fb, (name, rel)


def test_unknown_presentation_kind(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(
        '[scenario]\nname = "bad"\noperation = "verdict"\n'
        '[presentation]\nkind = "mystery"\n'
        '[cycle]\nkind = "fundamental"\n'
    )
    assert main(["run", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "unknown presentation kind" in err


def test_parse_diagnostics(tmp_path):
    madeup = tmp_path / "syntax.toml"
    madeup.write_text("[scenario\nname = oops")
    with pytest.raises(ScenarioError):
        load_scenario(madeup)
    noop = tmp_path / "noop.toml"
    noop.write_text('[scenario]\nname = "x"\noperation = "dance"\n')
    with pytest.raises(ScenarioError):
        load_scenario(noop)


def test_cli_subcommand_overrides_schedule(tmp_path, capsys):
    code = main(
        [
            "verdict",
            str(SCENARIOS / "fundamental-line.toml"),
            "--schedule",
            "5,10",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "verdict=NONTRIVIAL" in out
    rows = (tmp_path / "fundamental-line" / "verdict.tsv").read_text().splitlines()
    assert [line.split("\t")[0] for line in rows[1:]] == ["5", "10"]


def test_cli_run_parallel_merges_in_order(tmp_path, capsys):
    code = main(
        [
            "run",
            str(SCENARIOS / "line-profile.toml"),
            str(SCENARIOS / "three-step-prism.toml"),
            "--jobs",
            "2",
            "--out",
            str(tmp_path),
        ]
    )
    assert code == 0
    out_lines = capsys.readouterr().out.splitlines()
    assert out_lines[0].startswith("line-profile\t")
    assert out_lines[1].startswith("three-step-prism\t")
