"""Command-line entry point: ``xrank index|retrieve|explain|evaluate|sweep|plotdata|report``.

Exit codes: 0 success, 1 fatal error (nothing useful produced), 2 partial
failure (a run aborted after starting, or some sweep points failed).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import secrets
import sys
from pathlib import Path

from . import metrics as M
from .corpus_io import load_corpus, load_queries, write_report, write_run
from .errors import UndefinedCorrelationError, XRankError
from .pipeline import PipelineAbort, RunConfig, run_evaluation, sweep
from .scoring import BM25Params, build_index, load_index, retrieve_topk, save_index

logger = logging.getLogger("xrank")

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2

# flags handled by the shared parent parser rather than generated from RunConfig
_GLOBAL_FIELDS = {"seed", "workers", "scorer", "scorer_cmd", "scorer_addr", "scorer_timeout", "out_dir",
                  "abbrev_file", "stopwords_file", "metrics"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FATAL, f"{self.prog}: error: {message}\n")


def _int_list(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def _field_type(f: dataclasses.Field):
    ann = str(f.type)
    if "bool" in ann:
        return "bool"
    if "tuple[int" in ann:
        return _int_list
    if "tuple[str" in ann:
        return lambda s: tuple(x.strip() for x in s.split(",") if x.strip())
    if ann.startswith("int"):
        return int
    if ann.startswith("float"):
        return float
    return str


def _global_parent() -> argparse.ArgumentParser:
    defaults = RunConfig()
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="TOML file with RunConfig fields; flags override it")
    g.add_argument("--seed", type=int, help="random seed (default: a random seed, logged and recorded)")
    g.add_argument("--workers", type=int, help=f"parallel workers, capped by $XRANK_WORKERS (default: {defaults.workers})")
    g.add_argument("--scorer", choices=["bm25"], help="built-in scorer (default: bm25)")
    g.add_argument("--scorer-cmd", help="spawn an external scorer speaking the JSON-lines protocol")
    g.add_argument("--scorer-addr", help="connect to an external scorer at host:port")
    g.add_argument("--scorer-timeout", type=float, help=f"seconds per scorer round-trip (default: {defaults.scorer_timeout:g})")
    g.add_argument("--out-dir", help="directory for output files (default: xrank-out)")
    g.add_argument("--abbrev-file", help="abbreviation list for sentence splitting (default: bundled list)")
    g.add_argument("--stopwords", dest="stopwords_file", help="stopword list for cosine similarity (default: bundled list)")
    g.add_argument("--metrics", help="comma-separated subset of " + ",".join(M.METRIC_NAMES) + " (default: all)")
    g.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _add_run_flags(p: argparse.ArgumentParser):
    defaults = RunConfig()
    g = p.add_argument_group("run configuration")
    for f in dataclasses.fields(RunConfig):
        if f.name in _GLOBAL_FIELDS:
            continue
        flag = "--" + f.name.replace("_", "-")
        default = getattr(defaults, f.name)
        shown = ",".join(map(str, default)) if isinstance(default, tuple) else default
        typ = _field_type(f)
        if typ == "bool":
            g.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None,
                           help=f"(default: {shown})")
        else:
            g.add_argument(flag, dest=f.name, type=typ, default=None, help=f"(default: {shown})")


def build_parser() -> argparse.ArgumentParser:
    parent = _global_parent()
    parser = _Parser(prog="xrank", description="Occlusion rationales and explainability metrics for rankers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("index", parents=[parent], help="build a binary BM25 index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--corpus-format", choices=["jsonl", "tsv"])
    p.add_argument("--out", required=True, help="index file to write")

    p = sub.add_parser("retrieve", parents=[parent], help="BM25 top-k retrieval to a run file")
    p.add_argument("--index", help="index file from `xrank index` (otherwise built from --corpus)")
    p.add_argument("--corpus")
    p.add_argument("--corpus-format", choices=["jsonl", "tsv"])
    p.add_argument("--queries", required=True)
    p.add_argument("--k", type=int, default=1000, help="depth (default: 1000)")
    p.add_argument("--bm25-k1", type=float, default=1.2, help="(default: 1.2)")
    p.add_argument("--bm25-b", type=float, default=0.75, help="(default: 0.75)")
    p.add_argument("--tag", default="bm25", help="run tag (default: bm25)")
    p.add_argument("--out", required=True, help="run file to write")

    for name, helptext in (("explain", "explain the top-k of every query (writes explanations.jsonl)"),
                           ("evaluate", "full evaluation (writes report.json and report.tsv)"),
                           ("sweep", "evaluate over --m-list / --w-list (writes sweep.tsv)")):
        p = sub.add_parser(name, parents=[parent], help=helptext)
        _add_run_flags(p)

    p = sub.add_parser("plotdata", parents=[parent], help="scatter and sweep-curve tsv files from reports")
    p.add_argument("reports", nargs="+", help="report.json or sweep.json files")
    p.add_argument("--labels", help="comma-separated system labels, one per report")

    p = sub.add_parser("report", parents=[parent], help="convert a report.json to tsv")
    p.add_argument("report")
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.add_argument("--out", help="output path (default: stdout)")
    return parser


def config_from_args(args) -> RunConfig:
    overrides = {}
    for f in dataclasses.fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = val
    if args.config:
        cfg = RunConfig.from_toml(args.config, **overrides)
        seed_given = "seed" in overrides or _toml_has_seed(args.config)
    else:
        cfg = RunConfig(**overrides)
        seed_given = "seed" in overrides
    if not seed_given:
        seed = secrets.randbelow(2 ** 31)
        logger.warning("no --seed given; using random seed %d", seed)
        cfg = cfg.replace(seed=seed)
    if cfg.out_dir is None:
        cfg = cfg.replace(out_dir="xrank-out")
    return cfg


def _toml_has_seed(path) -> bool:
    from .pipeline import tomllib
    with open(path, "rb") as fh:
        return "seed" in tomllib.load(fh)


def cmd_index(args) -> int:
    index = build_index(load_corpus(args.corpus, args.corpus_format))
    save_index(index, args.out)
    logger.info("indexed %d documents into %s", index.N, args.out)
    return EXIT_OK


def cmd_retrieve(args) -> int:
    if args.index:
        index = load_index(args.index)
    elif args.corpus:
        index = build_index(load_corpus(args.corpus, args.corpus_format))
    else:
        raise ValueError("retrieve needs --index or --corpus")
    params = BM25Params(args.bm25_k1, args.bm25_b)
    runs = [retrieve_topk(index, params, q, args.k) for q in load_queries(args.queries).values()]
    write_run(runs, args.out, args.tag)
    return EXIT_OK


def cmd_explain(args) -> int:
    cfg = config_from_args(args)
    cfg = cfg.replace(metrics=())
    run_evaluation(cfg)
    logger.info("explanations written to %s", Path(cfg.out_dir) / "explanations.jsonl")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = config_from_args(args)
    report = run_evaluation(cfg)
    agg = report.aggregates
    print("\t".join(f"{c}={'NA' if agg.get(c) is None else format(agg[c], '.4f')}" for c in report.COLUMNS))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    result = sweep(cfg)
    sys.stdout.write(result.to_tsv())
    return EXIT_PARTIAL if result.failed else EXIT_OK


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _fmt(v):
    return "NA" if v is None else repr(float(v))


def cmd_plotdata(args) -> int:
    labels = args.labels.split(",") if args.labels else [Path(p).parent.name or Path(p).stem for p in args.reports]
    if len(labels) != len(args.reports):
        raise ValueError("--labels must name every report")
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    scatter = ["system\tquery_id\tndcg\tmrc\tmer"]
    corr = ["system\tpearson_ndcg_mrc\tpearson_ndcg_mer"]
    curves = ["system\tm\tw\tndcg\tmrc\tmer\tsc\tjaccard"]
    have_scatter = have_curves = False
    for label, path in zip(labels, args.reports):
        data = _read_json(path)
        if isinstance(data, list):
            have_curves = True
            for row in data:
                curves.append("\t".join([label, str(row["m"]), "NA" if row["w"] is None else str(row["w"]),
                                         *(_fmt(row.get(c)) for c in ("ndcg", "mrc", "mer", "sc", "jaccard"))]))
            continue
        have_scatter = True
        rep = M.EvalReport.from_dict(data)
        xs, ys, zs = [], [], []
        for qid, row in rep.per_query.items():
            scatter.append("\t".join([label, qid, _fmt(row.get("ndcg")), _fmt(row.get("mrc")), _fmt(row.get("mer"))]))
            if row.get("ndcg") is not None and row.get("mrc") is not None:
                xs.append(row["ndcg"])
                ys.append(row["mrc"])
            if row.get("ndcg") is not None and row.get("mer") is not None:
                zs.append((row["ndcg"], row["mer"]))
        corr.append("\t".join([label, _safe_pearson(xs, ys),
                               _safe_pearson([a for a, _ in zs], [b for _, b in zs])]))
    if have_scatter:
        (out_dir / "scatter.tsv").write_text("\n".join(scatter) + "\n", encoding="utf-8")
        (out_dir / "correlations.tsv").write_text("\n".join(corr) + "\n", encoding="utf-8")
    if have_curves:
        (out_dir / "curves.tsv").write_text("\n".join(curves) + "\n", encoding="utf-8")
    return EXIT_OK


def _safe_pearson(x, y) -> str:
    try:
        return repr(M.pearson_r(x, y))
    except (ValueError, UndefinedCorrelationError):
        return "NA"


def cmd_report(args) -> int:
    rep = M.EvalReport.load(args.report)
    if args.out:
        write_report(rep, args.out, args.format)
    else:
        sys.stdout.write(rep.to_tsv() if args.format == "tsv" else rep.to_json())
    return EXIT_OK


COMMANDS = {
    "index": cmd_index,
    "retrieve": cmd_retrieve,
    "explain": cmd_explain,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "plotdata": cmd_plotdata,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except PipelineAbort as exc:
        print(f"xrank {args.command}: partial failure: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except (XRankError, ValueError, OSError) as exc:
        print(f"xrank {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
