import argparse
import csv
import json

import pytest

from playernet import cli, synth
from playernet.ingest import write_match_log
from oracles import WEEK, record

SMALL = ["--players", "300", "--weeks", "10", "--influencers", "5", "--hubs", "5"]


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert cli.main(["synth", "--out", str(out), "--seed", "3", *SMALL]) == 0
    return out / "corpus.jsonl"


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_validate_reports_one_bad_line(tmp_path, capsys):
    good = [record(f"m{w}", w * WEEK, ["a"], ["b"]) for w in range(5)]
    path = tmp_path / "in.jsonl"
    write_match_log(good, path)
    with open(path, "a") as fh:
        fh.write('{"match_id": "broken"}\n')
    assert cli.main(["validate", "--input", str(path), "--out", str(tmp_path / "o")]) == 0
    err = capsys.readouterr().err
    assert "skipped 1 malformed line(s)" in err and "line 6" in err
    report = (tmp_path / "o" / "skip_report.txt").read_text()
    assert report.count("line 6") == 1
    assert len((tmp_path / "o" / "validated.jsonl").read_text().splitlines()) == 5


def test_granularity_table_layout(tmp_path, small_corpus):
    assert cli.main(["granularity", "--input", str(small_corpus), "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "granularity.csv")
    assert list(rows[0]) == ["granularity", "metric", "min", "q25", "median", "q75", "max"]
    assert [(r["granularity"], r["metric"]) for r in rows] == [
        (g, m) for g in ("day", "week", "month") for m in ("peaks", "slope", "rsd")]


def test_bad_flags_exit_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["summary", "--granularity", "year"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["influence", "--epsilon", "abc"])
    assert info.value.code == 2
    assert cli.main(["centrality", "--central-quantile", "1.0", "--out", str(tmp_path)]) == 2
    assert cli.main(["influence", "--epsilon", "-1", "--out", str(tmp_path)]) == 2
    assert cli.main(["pipeline", "--out", str(tmp_path)]) == 2


def test_missing_input_exit_1(tmp_path, capsys):
    assert cli.main(["summary", "--input", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path)]) == 1
    assert "io:" in capsys.readouterr().err
    assert cli.main(["compare", "--out", str(tmp_path)]) == 1


def test_analysis_error_names_module(tmp_path, capsys):
    path = tmp_path / "one_week.jsonl"
    write_match_log([record("m", 0, ["a", "b"], ["c"])], path)
    assert cli.main(["influence", "--input", str(path), "--out", str(tmp_path)]) == 1
    assert "influence:" in capsys.readouterr().err


def test_every_flag_documents_its_origin():
    parser = cli.build_parser()
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    assert set(subs.choices) == {"validate", "summary", "granularity", "centrality", "influence", "retention",
                                 "compare", "synth", "pipeline"}
    for name, sub in subs.choices.items():
        for action in sub._actions:
            if isinstance(action, argparse._HelpAction):
                continue
            assert "[method" in action.help or "[configuration" in action.help, (name, action.dest)


def test_stages_run_from_earlier_outputs(tmp_path, small_corpus):
    staged = tmp_path / "staged"
    steps = [
        ["validate", "--input", str(small_corpus)],
        ["summary"], ["centrality"], ["influence"], ["retention"], ["compare"],
    ]
    for step in steps:
        assert cli.main([*step, "--out", str(staged)]) == 0, step
    whole = tmp_path / "whole"
    assert cli.main(["pipeline", "--input", str(small_corpus), "--out", str(whole)]) == 0
    for name in ("validated.jsonl", "graph_summary.json", "node_degrees.csv", "centrality.csv", "ledger.csv",
                 "node_influence.csv", "influential.csv", "retention.csv", "comparison.csv", "comparison.txt"):
        assert (staged / name).read_bytes() == (whole / name).read_bytes(), name


def test_pipeline_reports(tmp_path, small_corpus):
    out = tmp_path / "run"
    assert cli.main(["pipeline", "--input", str(small_corpus), "--out", str(out),
                     "--influential-quantiles", "0.99", "0.9"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["config"]["influential_quantiles"] == [0.9, 0.99]
    assert summary["config"]["granularity"] == "week"
    assert "hubs_vs_central" in summary["recovery"]
    assert list(read_rows(out / "centrality.csv")[0]) == [
        "player_id", "degree", "closeness", "betweenness", "eigenvector", "pagerank", "central"]
    assert list(read_rows(out / "ledger.csv")[0]) == ["edge", "snapshot", "credited_player", "value"]
    assert list(read_rows(out / "node_influence.csv")[0]) == [
        "player", "influence", "edge_sd", "temporal_degree", "retention_transfer"]
    table = (out / "comparison.txt").read_text()
    assert "influence" in table and "a_greater" in table
    assert {r["metric"] for r in read_rows(out / "comparison.csv")} >= {"influence", "degree", "retention_transfer"}


def test_pipeline_is_repeatable(tmp_path, small_corpus):
    runs = []
    for i, threads in enumerate(("1", "2")):
        out = tmp_path / f"r{i}"
        assert cli.main(["pipeline", "--input", str(small_corpus), "--out", str(out), "--threads", threads]) == 0
        runs.append(out)
    names = sorted(p.name for p in runs[0].iterdir())
    assert names == sorted(p.name for p in runs[1].iterdir())
    for name in names:
        assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes(), name


def test_synth_desk_scale_flag_parses():
    args = cli.build_parser().parse_args(["synth", "--desk-scale", "--out", "x"])
    assert args.desk_scale and args.players is None
    assert synth.DESK_SCALE.players == 10_000 and synth.DESK_SCALE.weeks == 48
