"""Command-line entry point: ``playernet <subcommand> [options]``.

Each subcommand writes its reports into ``--out`` and can run on its own,
reading whatever earlier stages left behind:

    validate      corpus.jsonl            -> validated.jsonl, skip_report.txt
    summary       validated.jsonl         -> graph_summary.{txt,json}, node_degrees.csv
    granularity   validated.jsonl         -> granularity.csv
    centrality    validated.jsonl         -> centrality.csv
    influence     validated.jsonl         -> ledger.csv, node_influence.csv, influential.csv
    retention     validated.jsonl         -> retention.csv
    compare       a directory of the above -> comparison.csv, comparison.txt
    synth         (nothing)               -> corpus.jsonl, ground_truth.csv, synth_config.json
    pipeline      corpus.jsonl            -> all of the above plus summary.json

Flags tagged [method] carry the defaults of the published analysis method;
flags tagged [configuration] are knobs of this tool with no published value.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import _kernels, centrality, graph, influence, ingest, stats, synth, temporal
from .errors import AnalysisError

FLOAT_FORMAT = repr  # shortest round-trip text, stable across runs


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    inputs: list[Path] = field(default_factory=list)
    out: Path = Path(".")
    granularity: str = "week"
    epsilon: float = influence.DEFAULT_EPSILON
    w0: float = influence.DEFAULT_W0
    peak_threshold: float = 0.5
    central_quantile: float = 0.90
    influential_quantiles: tuple[float, ...] = (0.90, 0.99, 0.999)
    min_weeks: int = 5
    seed: int = 0
    exact_paths_limit: int = 20_000
    threads: int | None = None

    def validate(self) -> None:
        for q in (self.central_quantile, *self.influential_quantiles):
            if not 0.0 < q < 1.0:
                raise UsageError(f"quantile {q} must lie in (0, 1)")
        if not self.influential_quantiles:
            raise UsageError("at least one influential quantile is required")
        if self.epsilon < 0:
            raise UsageError("epsilon must be >= 0")
        if self.w0 <= 0:
            raise UsageError("w0 must be > 0")
        if self.peak_threshold < 0:
            raise UsageError("peak threshold must be >= 0")
        if self.min_weeks < 1:
            raise UsageError("min-weeks must be >= 1 (1 keeps every player)")
        if self.exact_paths_limit < 0:
            raise UsageError("exact-paths-limit must be >= 0")
        if self.threads is not None and self.threads < 1:
            raise UsageError("threads must be >= 1")

    def to_dict(self) -> dict:
        return {
            "granularity": self.granularity,
            "epsilon": self.epsilon,
            "w0": self.w0,
            "peak_threshold": self.peak_threshold,
            "central_quantile": self.central_quantile,
            "influential_quantiles": list(self.influential_quantiles),
            "min_weeks": self.min_weeks,
            "seed": self.seed,
            "exact_paths_limit": self.exact_paths_limit,
        }


# ---------------------------------------------------------------------------
# report writers


def _fmt(value):
    if isinstance(value, float):
        return FLOAT_FORMAT(value)
    if isinstance(value, bool):
        return int(value)
    return value


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _finite(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n",
                    encoding="utf-8")
    return path


def _stage_file(cfg: RunConfig, name: str) -> Path:
    """Locate an earlier stage's report: an explicit ``--input`` wins, else ``--out``."""
    for p in cfg.inputs:
        if p.is_dir() and (p / name).exists():
            return p / name
        if p.name == name and p.exists():
            return p
    candidate = cfg.out / name
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"{name} not found; run the stage that produces it or pass --input")


def _load_records(cfg: RunConfig, default_name: str = "validated.jsonl") -> list[ingest.MatchRecord]:
    if cfg.inputs:
        path = cfg.inputs[0]
        if path.is_dir():
            path = path / default_name
    else:
        path = cfg.out / default_name
    records, report = ingest.read_match_log(path)
    if report.count:
        print(report.render(), file=sys.stderr)
    return records


# ---------------------------------------------------------------------------
# stages


def stage_validate(cfg: RunConfig) -> dict:
    if not cfg.inputs:
        raise UsageError("validate needs --input")
    records, report = ingest.read_match_log(cfg.inputs[0])
    print(report.render(), file=sys.stderr)
    kept, retained = ingest.filter_short_lived_players(records, cfg.min_weeks)
    ingest.write_match_log(kept, cfg.out / "validated.jsonl")
    (cfg.out / "skip_report.txt").write_text(report.render() + "\n", encoding="utf-8")
    players = set().union(*(r.players() for r in records)) if records else set()
    return {
        "matches_read": len(records),
        "lines_skipped": report.count,
        "matches_retained": len(kept),
        "players_read": len(players),
        "players_retained": len(retained),
    }


def stage_summary(cfg: RunConfig, records) -> tuple[graph.PlayerGraph, dict]:
    g = graph.build_static_graph(records)
    summary = graph.graph_summary(g, exact_paths_limit=cfg.exact_paths_limit, seed=cfg.seed)
    (cfg.out / "graph_summary.txt").write_text(summary.to_text() + "\n", encoding="utf-8")
    (cfg.out / "graph_summary.json").write_text(summary.to_json() + "\n", encoding="utf-8")
    strengths = graph.node_strengths(g)
    write_csv(cfg.out / "node_degrees.csv", ("player_id", "degree", "weighted_degree", "avg_weighted_degree"),
              ((p, *strengths[p]) for p in sorted(strengths)))
    return g, summary.to_dict()


def stage_granularity(cfg: RunConfig, records) -> list[temporal.GranularityRow]:
    rows = temporal.granularity_report(records, rel_threshold=cfg.peak_threshold)
    write_csv(cfg.out / "granularity.csv", temporal.GRANULARITY_COLUMNS, (r.as_row() for r in rows))
    return rows


def stage_centrality(cfg: RunConfig, g: graph.PlayerGraph) -> dict:
    scores = centrality.compute_centralities(g)
    selection = centrality.select_central_players(scores, cfg.central_quantile)
    write_csv(cfg.out / "centrality.csv", ("player_id", *centrality.MEASURES, "central"),
              ((*row, row[0] in selection.players) for row in scores.rows()))
    return {"quantile": cfg.central_quantile, "thresholds": selection.thresholds,
            "central_players": len(selection.players)}


def stage_influence(cfg: RunConfig, records) -> dict:
    series = temporal.build_snapshots(records, cfg.granularity)
    ledger = influence.compute_ledger(series, epsilon=cfg.epsilon, w0=cfg.w0)
    nodes = influence.node_influence(ledger, series)
    rt = influence.retention_transfer_all(series)

    write_csv(cfg.out / "ledger.csv", ("edge", "snapshot", "credited_player", "value"),
              (("|".join(e.edge), e.snapshot, e.credited_player or "", e.value) for e in ledger.entries()))
    write_csv(cfg.out / "node_influence.csv",
              ("player", "influence", "edge_sd", "temporal_degree", "retention_transfer"),
              ((p, v.influence, v.edge_sd, v.temporal_degree, rt[p].value if p in rt else "")
               for p, v in sorted(nodes.items())))
    scores = {p: v.influence for p, v in nodes.items()}
    selections = {q: influence.select_influential(scores, q) for q in cfg.influential_quantiles}
    write_csv(cfg.out / "influential.csv", ("quantile", "player_id"),
              ((q, p) for q in cfg.influential_quantiles for p in sorted(selections[q])))
    _write_retention(cfg, rt)
    return {
        "snapshots": series.k,
        "ledger_entries": len(ledger),
        "credited_entries": int((ledger.credited >= 0).sum()),
        "influential_players": {str(q): len(s) for q, s in selections.items()},
    }


def _write_retention(cfg: RunConfig, rt) -> None:
    write_csv(cfg.out / "retention.csv", ("player_id", "retention_transfer", "neighbors"),
              ((p, v.value, v.neighbors) for p, v in sorted(rt.items())))


def stage_retention(cfg: RunConfig, records) -> dict:
    rt = influence.retention_transfer_all(temporal.build_snapshots(records, cfg.granularity))
    _write_retention(cfg, rt)
    return {"players_with_neighbors": len(rt)}


def _floats(rows, key_col, value_col) -> dict[str, float]:
    return {r[key_col]: float(r[value_col]) for r in rows if r[value_col] != ""}


def stage_compare(cfg: RunConfig) -> list[dict]:
    cent_rows = read_csv(_stage_file(cfg, "centrality.csv"))
    node_rows = read_csv(_stage_file(cfg, "node_influence.csv"))
    deg_rows = read_csv(_stage_file(cfg, "node_degrees.csv"))
    infl_rows = read_csv(_stage_file(cfg, "influential.csv"))

    central = {r["player_id"] for r in cent_rows if r["central"] == "1"}
    metrics = {m: _floats(cent_rows, "player_id", m) for m in centrality.MEASURES}
    metrics["influence"] = _floats(node_rows, "player", "influence")
    metrics["edge_influence_sd"] = _floats(node_rows, "player", "edge_sd")
    metrics["retention_transfer"] = _floats(node_rows, "player", "retention_transfer")
    metrics["avg_weighted_degree"] = _floats(deg_rows, "player_id", "avg_weighted_degree")

    groups: dict[float, set[str]] = {}
    for r in infl_rows:
        groups.setdefault(float(r["quantile"]), set()).add(r["player_id"])

    results, table = [], []
    for q in sorted(groups):
        report = stats.compare_groups(central, groups[q], metrics)
        for c in report.comparisons:
            decision = "reject" if c.significant() else "retain"
            table.append((q, c.metric, c.u, c.p_value, c.alternative, decision, c.n_a, c.n_b,
                          c.mean_a, c.sd_a, c.mean_b, c.sd_b, c.method))
        results.append({
            "influential_quantile": q,
            "n_influential": report.n_influential,
            "n_central": report.n_central,
            "overlap": sorted(report.overlap),
            "tests": {c.metric: {"u": c.u, "p_value": c.p_value, "alternative": c.alternative,
                                 "significant": c.significant()} for c in report.comparisons},
        })

    header = ("influential_quantile", "metric", "u", "p_value", "direction", "decision_0.05", "n_influential",
              "n_central", "mean_influential", "sd_influential", "mean_central", "sd_central", "method")
    write_csv(cfg.out / "comparison.csv", header, table)
    (cfg.out / "comparison.txt").write_text(render_comparison(table), encoding="utf-8")
    return results


def render_comparison(table) -> str:
    lines = [f"{'quantile':>8}  {'metric':<20} {'U':>12} {'p':>11}  {'direction':<10} decision"]
    for q, metric, u, p, direction, decision, *_ in table:
        lines.append(f"{q:>8}  {metric:<20} {u:>12.1f} {p:>11.3e}  {direction:<10} {decision}")
    return "\n".join(lines) + "\n"


def stage_synth(cfg: RunConfig, args) -> dict:
    base = synth.DESK_SCALE if args.desk_scale else synth.SynthConfig()
    scfg = synth.with_overrides(base, seed=cfg.seed, players=args.players, weeks=args.weeks,
                                influencers=args.influencers, hubs=args.hubs, mimic_rate=args.mimic_rate,
                                noise=args.noise)
    corpus = synth.generate(scfg)
    corpus.write(cfg.out)
    write_json(cfg.out / "synth_config.json", synth.config_to_dict(scfg))
    return {"matches": len(corpus.records), "players": len(corpus.roles)}


def stage_pipeline(cfg: RunConfig) -> dict:
    validation = stage_validate(cfg)
    records = _load_records(RunConfig(out=cfg.out))
    g, summary = stage_summary(cfg, records)
    gran = stage_granularity(cfg, records)
    cent = stage_centrality(cfg, g)
    infl = stage_influence(cfg, records)
    comparisons = stage_compare(RunConfig(out=cfg.out))
    result = {
        "config": cfg.to_dict(),
        "validation": validation,
        "graph": summary,
        "granularity": {f"{r.granularity}.{r.metric}.median": r.median for r in gran},
        "centrality": cent,
        "influence": infl,
        "comparisons": comparisons,
    }
    truth = _ground_truth_beside(cfg.inputs[0])
    if truth is not None:
        result["recovery"] = _recovery(cfg, truth)
    return result


def _ground_truth_beside(corpus: Path) -> dict[str, str] | None:
    path = corpus.parent / "ground_truth.csv"
    return synth.read_ground_truth(path) if path.exists() else None


def _recovery(cfg: RunConfig, roles: dict[str, str]) -> dict:
    hubs = {p for p, r in roles.items() if r == "hub"}
    planted = {p for p, r in roles.items() if r == "influencer"}
    central = {r["player_id"] for r in read_csv(cfg.out / "centrality.csv") if r["central"] == "1"}
    out = {}
    if hubs:
        out["hubs_vs_central"] = dict(zip(("precision", "recall"), synth.evaluate_recovery(central, hubs)))
    if planted:
        groups: dict[float, set[str]] = {}
        for r in read_csv(cfg.out / "influential.csv"):
            groups.setdefault(float(r["quantile"]), set()).add(r["player_id"])
        for q, sel in sorted(groups.items()):
            out[f"influencers_vs_influential_{q}"] = dict(
                zip(("precision", "recall"), synth.evaluate_recovery(sel, planted)))
    return out


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser, *, needs_input: bool = True) -> None:
    if needs_input:
        p.add_argument("--input", action="append", type=Path, default=[], metavar="PATH",
                       help="corpus file or directory of earlier reports (repeatable) [configuration]")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory [configuration]")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for every randomized step, e.g. sampled path lengths [configuration]")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads for graph kernels; outputs do not depend on it [configuration]")


def _add_granularity(p):
    p.add_argument("--granularity", choices=[g.name for g in temporal.Granularity], default="week",
                   help="snapshot width; week is the method's choice (default: %(default)s) [method]")


def _add_influence(p):
    p.add_argument("--epsilon", type=float, default=influence.DEFAULT_EPSILON,
                   help="scaled-L2 distance above which behaviour counts as changed "
                        "(default: %(default)s) [configuration, not part of the published method]")
    p.add_argument("--w0", type=float, default=influence.DEFAULT_W0,
                   help="co-play count at which the logarithmic weight adjustment saturates "
                        "(default: %(default)s) [configuration; the method fixes only the log shape]")
    p.add_argument("--influential-quantiles", type=float, nargs="+", default=[0.90, 0.99, 0.999],
                   metavar="Q", help="influence-score quantiles defining influential players "
                                     "(default: 0.90 0.99 0.999) [method]")


def _add_central(p):
    p.add_argument("--central-quantile", type=float, default=0.90,
                   help="per-measure quantile a central player must reach on all five "
                        "measures (default: %(default)s) [method]")


def _add_filter(p):
    p.add_argument("--min-weeks", type=int, default=5,
                   help="drop players active in fewer distinct weeks (default: %(default)s) [method]")


def _add_peak(p):
    p.add_argument("--peak-threshold", type=float, default=0.5,
                   help="jump, relative to the series maximum, that makes a turning point a peak "
                        "(default: %(default)s) [configuration, not part of the published method]")


def _add_paths(p):
    p.add_argument("--exact-paths-limit", type=int, default=20_000,
                   help="largest component size for exact all-pairs path statistics; above it "
                        "path length is estimated from sampled sources (default: %(default)s) [configuration]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="playernet", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("validate", help="parse a match log, report bad lines, drop short-lived players")
    _add_common(p); _add_filter(p)

    p = sub.add_parser("summary", help="static co-play graph statistics")
    _add_common(p); _add_paths(p)

    p = sub.add_parser("granularity", help="participation stability at day, week and month widths")
    _add_common(p); _add_peak(p)

    p = sub.add_parser("centrality", help="five centrality measures and the central-player flag")
    _add_common(p); _add_central(p)

    p = sub.add_parser("influence", help="edge influence ledger, node scores and influential players")
    _add_common(p); _add_granularity(p); _add_influence(p)

    p = sub.add_parser("retention", help="retention transfer per player")
    _add_common(p); _add_granularity(p)

    p = sub.add_parser("compare", help="Mann-Whitney battery: influential versus central players")
    _add_common(p)

    p = sub.add_parser("synth", help="write a synthetic corpus with planted influencers and hubs")
    _add_common(p, needs_input=False)
    p.add_argument("--desk-scale", action="store_true",
                   help="10k players over 48 weeks instead of the small default [configuration]")
    for name, typ in (("players", int), ("weeks", int), ("influencers", int), ("hubs", int),
                      ("mimic-rate", float), ("noise", float)):
        p.add_argument(f"--{name}", type=typ, default=None, help="override the synthetic config [configuration]")

    p = sub.add_parser("pipeline", help="every stage end to end, plus summary.json")
    _add_common(p); _add_filter(p); _add_paths(p); _add_peak(p)
    _add_central(p); _add_granularity(p); _add_influence(p)
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(inputs=list(getattr(args, "input", [])), out=args.out, seed=args.seed, threads=args.threads)
    for name in ("granularity", "epsilon", "w0", "peak_threshold", "central_quantile",
                 "min_weeks", "exact_paths_limit"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if hasattr(args, "influential_quantiles"):
        cfg.influential_quantiles = tuple(sorted(set(args.influential_quantiles)))
    cfg.validate()
    return cfg


def run(args) -> dict:
    cfg = config_from_args(args)
    if cfg.threads is not None:
        _kernels.set_threads(cfg.threads)
    cfg.out.mkdir(parents=True, exist_ok=True)
    cmd = args.command
    if cmd == "validate":
        return stage_validate(cfg)
    if cmd == "synth":
        return stage_synth(cfg, args)
    if cmd == "compare":
        return {"comparisons": stage_compare(cfg)}
    if cmd == "pipeline":
        if not cfg.inputs:
            raise UsageError("pipeline needs --input")
        result = stage_pipeline(cfg)
        write_json(cfg.out / "summary.json", result)
        return result
    records = _load_records(cfg)
    if cmd == "summary":
        return stage_summary(cfg, records)[1]
    if cmd == "granularity":
        return {"rows": len(stage_granularity(cfg, records))}
    if cmd == "centrality":
        return stage_centrality(cfg, graph.build_static_graph(records))
    if cmd == "influence":
        return stage_influence(cfg, records)
    if cmd == "retention":
        return stage_retention(cfg, records)
    raise UsageError(f"unknown subcommand {cmd}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    try:
        run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"playernet: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"playernet: io: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"playernet: error: {exc}", file=sys.stderr)
        return 1
    except AnalysisError as exc:
        print(f"playernet: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
