"""Command-line entry point wiring the analytics pipeline end to end.

Every phase persists its artifacts into the output directory so any
subcommand can be re-run from the previous phase's files. Outputs are
deterministic for fixed inputs and seed; wall-clock timestamps go only
into run_manifest.json.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import features, ingest, learn, plots, ranking, semantics, synth

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INTERNAL_ERROR = 2

MODES = ("offline", "nlu-cached", "nlu-live")


class UserError(Exception):
    """Invalid input or arguments; reported to stderr with exit code 1."""


class _Parser(argparse.ArgumentParser):
    # Usage problems are user errors (exit 1), not internal errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER_ERROR, f"{self.prog}: error: {message}\n")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output-dir", type=Path, default=Path("out"),
                        help="directory for all artifacts (default: out)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker cap for parallel-safe phases; results are independent of it")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def _add_semantics_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", type=Path, default=None,
                        help="category corpus directory (default: shipped fixture corpus)")
    parser.add_argument("--sentiment-lexicon", type=Path, default=None,
                        help="TSV term<TAB>value lexicon (default: shipped lexicon)")
    parser.add_argument("--url-fixtures", type=Path, default=None,
                        help="TSV url<TAB>path map for offline URL text")
    parser.add_argument("--mode", choices=MODES, default="offline")
    parser.add_argument("--nlu-cache", type=Path, default=None,
                        help="response cache directory for nlu modes")
    parser.add_argument("--top-k", type=int, default=3)


def _add_feature_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau", type=float, default=0.5,
                        help="assignment score threshold for domain membership")


def _add_window_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--min-posts", type=int, default=50)
    parser.add_argument("--span-start", type=str, default=None)
    parser.add_argument("--span-end", type=str, default=None)
    parser.add_argument("--dense", action="store_true",
                        help="emit empty months between the first and last active ones")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=("all",) + learn.MODEL_KINDS, default="all")
    parser.add_argument("--lr", type=float, default=0.5)
    parser.add_argument("--epochs", type=int, default=2000)
    parser.add_argument("--l2", type=float, default=1e-4)
    parser.add_argument("--test-fraction", type=float, default=0.3)


def build_parser() -> _Parser:
    parser = _Parser(prog="socialcred", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a labeled synthetic dataset")
    _add_common(p)
    p.add_argument("--users", type=int, default=100)
    p.add_argument("--domains", type=int, default=10)
    p.add_argument("--influencer-fraction", type=float, default=0.3)
    p.add_argument("--spammer-fraction", type=float, default=0.3)
    p.add_argument("--posts-min", type=int, default=50)
    p.add_argument("--posts-max", type=int, default=70)
    p.add_argument("--separation", type=float, default=0.9)
    p.add_argument("--months", type=int, default=1)
    p.add_argument("--base-month", type=str, default="2017-01")
    p.add_argument("--no-cleanse-floor", action="store_true")
    p.add_argument("--corpus", type=Path, default=None)
    p.add_argument("--stdout", action="store_true", help="write JSONL to stdout instead of a file")
    p.add_argument("--labels-out", type=Path, default=None)

    p = sub.add_parser("ingest", help="load, cleanse and window a JSONL dataset")
    _add_common(p)
    p.add_argument("--input", required=True, help="JSONL path, or - for stdin")
    _add_window_flags(p)
    p.add_argument("--report-path", type=str, default=None,
                   help="cleanse report destination (- for stdout; default: <outdir>/cleanse_report.json)")

    p = sub.add_parser("classify", help="assign domains and reply sentiment")
    _add_common(p)
    _add_semantics_flags(p)

    p = sub.add_parser("features", help="compute per-(user, domain, window) features")
    _add_common(p)
    _add_semantics_flags(p)
    _add_feature_flags(p)

    p = sub.add_parser("rank", help="rank users per domain and window")
    _add_common(p)
    p.add_argument("--key", choices=ranking.RANKING_KEYS, default="W")
    p.add_argument("--domain", type=str, default=None)
    p.add_argument("--window", type=str, default=None)
    p.add_argument("--model-file", type=Path, default=None,
                   help="model JSON for --key model_probability")
    p.add_argument("--report", choices=("json", "csv"), default="csv")

    p = sub.add_parser("train", help="train influencer classifiers")
    _add_common(p)
    p.add_argument("--labels", type=Path, default=None,
                   help="labels CSV (default: <outdir>/labels.csv)")
    _add_model_flags(p)

    p = sub.add_parser("eval", help="evaluate trained models on the held-out split")
    _add_common(p)
    p.add_argument("--labels", type=Path, default=None)
    _add_model_flags(p)
    p.add_argument("--plots", action="store_true", help="emit SVG plots")
    p.add_argument("--report", choices=("json", "csv"), default="json")

    p = sub.add_parser("report", help="summarize artifacts and emit plots")
    _add_common(p)
    p.add_argument("--plots", action="store_true")
    p.add_argument("--report", choices=("json", "csv"), default="json")
    p.add_argument("--user", type=str, default=None, help="user for the temporal chart")
    p.add_argument("--domain", type=str, default=None, help="domain for the temporal chart")

    p = sub.add_parser("pipeline", help="run every phase in order")
    _add_common(p)
    p.add_argument("--input", required=True, help="JSONL path, or - for stdin")
    p.add_argument("--labels", type=Path, default=None)
    _add_window_flags(p)
    _add_semantics_flags(p)
    _add_feature_flags(p)
    _add_model_flags(p)
    p.add_argument("--key", choices=ranking.RANKING_KEYS, default="W")
    p.add_argument("--plots", action="store_true")
    p.add_argument("--report", choices=("json", "csv"), default="json")

    return parser


# ---------------------------------------------------------------- helpers


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_span(args):
    if args.span_start is None and args.span_end is None:
        return None
    if args.span_start is None or args.span_end is None:
        raise UserError("--span-start and --span-end must be given together")
    try:
        return (ingest.parse_timestamp(args.span_start), ingest.parse_timestamp(args.span_end))
    except ValueError as exc:
        raise UserError(f"bad span timestamp: {exc}") from exc


def _read_input_jsonl(args, out: Path) -> Path:
    if args.input == "-":
        path = out / "dataset.jsonl"
        path.write_text(sys.stdin.read(), "utf-8")
        return path
    path = Path(args.input)
    if not path.exists():
        raise UserError(f"input file not found: {path}")
    return path


def _load_windows(out: Path) -> list[ingest.TimeWindow]:
    path = out / "windows.json"
    if not path.exists():
        raise UserError(f"missing {path}; run the ingest phase first")
    payload = json.loads(path.read_text("utf-8"))
    return [ingest.month_window(entry["label"]) for entry in payload["windows"]]


def _load_cleansed(out: Path) -> ingest.Dataset:
    path = out / "cleansed.jsonl"
    if not path.exists():
        raise UserError(f"missing {path}; run the ingest phase first")
    return ingest.load_dataset(path)


def _load_annotations(out: Path) -> semantics.SemanticAnnotations:
    path = out / "annotations.json"
    if not path.exists():
        raise UserError(f"missing {path}; run the classify phase first")
    try:
        return semantics.SemanticAnnotations.from_json(path.read_text("utf-8"))
    except (ValueError, KeyError) as exc:
        raise UserError(f"unreadable annotations at {path}: {exc}") from exc


def _load_vectors(out: Path) -> list[features.FeatureVector]:
    path = out / "features.csv"
    if not path.exists():
        raise UserError(f"missing {path}; run the features phase first")
    try:
        return features.read_features_csv(path)
    except ValueError as exc:
        raise UserError(f"unreadable features at {path}: {exc}") from exc


def _category_index(corpus: Path | None) -> semantics.CategoryIndex:
    corpus_dir = corpus or semantics.default_corpus_dir()
    model = semantics.train_category_model(semantics.load_corpus(corpus_dir))
    return semantics.CategoryIndex(model)


def _lexicon(path: Path | None) -> semantics.SentimentLexicon:
    return semantics.SentimentLexicon.from_tsv(path) if path else semantics.SentimentLexicon.default()


def _labels_path(args, out: Path) -> Path:
    path = args.labels or (out / "labels.csv")
    if not path.exists():
        raise UserError(f"labels file not found: {path}")
    return path


def _write_manifest(out: Path, command: str, started: float, phases: dict) -> None:
    manifest = {
        "command": command,
        "started_at": datetime.fromtimestamp(started, tz=timezone.utc).isoformat(),
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "duration_s": round(time.time() - started, 3),
        "phases": phases,
    }
    (out / "run_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True), "utf-8")


# ---------------------------------------------------------------- phases


def phase_ingest(args, out: Path) -> tuple[ingest.Dataset, list[ingest.TimeWindow]]:
    input_path = _read_input_jsonl(args, out)
    try:
        raw = ingest.load_dataset(input_path)
    except ingest.DatasetFormatError as exc:
        raise UserError(str(exc)) from exc
    cleansed, report = ingest.cleanse(raw, min_posts=args.min_posts)
    windowed = ingest.partition_windows(cleansed, span=_parse_span(args),
                                        include_empty=args.dense)

    (out / "cleansed.jsonl").write_text(ingest.dataset_to_jsonl(cleansed), "utf-8")
    report_target = getattr(args, "report_path", None)
    if report_target == "-":
        print(report.to_json())
    else:
        Path(report_target or out / "cleanse_report.json").write_text(report.to_json() + "\n", "utf-8")
    windows_payload = {
        "windows": [
            {
                "label": window.label,
                "start": ingest.format_timestamp(window.start),
                "end": ingest.format_timestamp(window.end),
                "users": snapshot.user_count,
                "posts": snapshot.post_count,
                "replies": len(snapshot.replies),
            }
            for window, snapshot in windowed
        ]
    }
    (out / "windows.json").write_text(json.dumps(windows_payload, indent=2, sort_keys=True), "utf-8")
    return cleansed, [window for window, _ in windowed]


def phase_classify(args, out: Path, dataset: ingest.Dataset) -> semantics.SemanticAnnotations:
    url_source = None
    if args.url_fixtures:
        url_source = semantics.UrlTextSource.from_fixture_tsv(args.url_fixtures)
    elif args.mode == "nlu-live":
        url_source = semantics.UrlTextSource(online=True)

    if args.mode == "offline":
        index = _category_index(args.corpus)
        annotations = semantics.annotate_dataset(
            dataset, index, _lexicon(args.sentiment_lexicon),
            url_source=url_source, top_k=args.top_k, threads=max(1, args.threads),
        )
    else:
        client = semantics.NluClient(
            cache_dir=args.nlu_cache or out / "nlu_cache",
            live=(args.mode == "nlu-live"),
        )
        try:
            annotations = semantics.annotate_dataset_nlu(
                dataset, client, url_source=url_source, top_k=args.top_k
            )
        except LookupError as exc:
            raise UserError(str(exc)) from exc
    (out / "annotations.json").write_text(annotations.to_json(), "utf-8")
    return annotations


def phase_features(args, out: Path, dataset, windows, annotations) -> list[features.FeatureVector]:
    vectors = features.extract_features(dataset, windows, annotations, tau=args.tau)
    features.write_features_csv(vectors, out / "features.csv")
    return vectors


def phase_rank(args, out: Path, vectors) -> list[ranking.DomainRanking]:
    score_fn = None
    if args.key == "model_probability":
        model_file = getattr(args, "model_file", None) or out / "model_logistic.json"
        if not Path(model_file).exists():
            raise UserError(f"model file not found: {model_file}")
        model = learn.Model.from_json(Path(model_file).read_text("utf-8"))
        score_fn = lambda v: learn.predict(model, v)  # noqa: E731

    domain = getattr(args, "domain", None)
    window = getattr(args, "window", None)
    if domain and window:
        rankings = [ranking.rank_domain(vectors, domain, window, args.key, score_fn)]
    else:
        rankings = ranking.rank_all(vectors, args.key, score_fn)
    ranking.write_rankings_csv(rankings, out / "rankings.csv")
    if getattr(args, "report", "csv") == "json":
        (out / "rankings.json").write_text(ranking.rankings_to_json(rankings), "utf-8")
    return rankings


def _model_kinds(args) -> tuple[str, ...]:
    return learn.MODEL_KINDS if args.model == "all" else (args.model,)


def _split_examples(args, vectors, labels_path: Path):
    labels = learn.load_labels_csv(labels_path)
    examples = learn.label_examples(vectors, labels)
    try:
        return learn.split(examples, args.test_fraction, args.seed)
    except ValueError as exc:
        raise UserError(str(exc)) from exc


def phase_train(args, out: Path, vectors, labels_path: Path) -> dict[str, learn.Model]:
    train_set, _ = _split_examples(args, vectors, labels_path)
    models: dict[str, learn.Model] = {}
    for kind in _model_kinds(args):
        if kind == "logistic":
            model = learn.train_logistic(train_set, lr=args.lr, epochs=args.epochs,
                                         l2=args.l2, seed=args.seed)
        else:
            model = learn.train_baseline(train_set, kind, seed=args.seed)
        (out / f"model_{kind}.json").write_text(model.to_json() + "\n", "utf-8")
        models[kind] = model
    return models


def phase_eval(args, out: Path, vectors, labels_path: Path,
               models: dict[str, learn.Model] | None = None) -> dict[str, learn.EvalReport]:
    _, test_set = _split_examples(args, vectors, labels_path)
    if models is None:
        models = {}
        for kind in _model_kinds(args):
            path = out / f"model_{kind}.json"
            if not path.exists():
                raise UserError(f"missing {path}; run the train phase first")
            models[kind] = learn.Model.from_json(path.read_text("utf-8"))
    reports: dict[str, learn.EvalReport] = {}
    for kind, model in models.items():
        report = learn.evaluate(model, test_set)
        (out / f"eval_{kind}.json").write_text(report.to_json() + "\n", "utf-8")
        learn.write_roc_csv(report.roc_points, out / f"roc_{kind}.csv")
        reports[kind] = report
    if getattr(args, "plots", False):
        _emit_eval_plots(out, reports)
    return reports


def _emit_eval_plots(out: Path, reports: dict[str, learn.EvalReport]) -> None:
    kinds = sorted(reports)
    curves = [(kind, reports[kind].roc_points) for kind in kinds]
    (out / "roc_curves.svg").write_text(plots.roc_svg(curves), "utf-8")
    bars = plots.grouped_bars_svg(
        kinds,
        {
            "accuracy": [reports[k].accuracy for k in kinds],
            "error": [reports[k].classification_error for k in kinds],
        },
        title="Model accuracy and classification error",
    )
    (out / "accuracy_error_bars.svg").write_text(bars, "utf-8")


def phase_report(args, out: Path, vectors, reports: dict[str, learn.EvalReport] | None) -> None:
    if reports is None:
        reports = {}
        for kind in learn.MODEL_KINDS:
            path = out / f"eval_{kind}.json"
            if path.exists():
                payload = json.loads(path.read_text("utf-8"))
                reports[kind] = learn.EvalReport(
                    accuracy=payload["accuracy"],
                    classification_error=payload["classification_error"],
                    tp=payload["confusion"]["tp"], fp=payload["confusion"]["fp"],
                    tn=payload["confusion"]["tn"], fn=payload["confusion"]["fn"],
                    roc_points=tuple(tuple(p) for p in payload["roc_points"]),
                    auc=payload["auc"],
                )

    summary = {
        "vectors": len(vectors),
        "windows": sorted({v.window for v in vectors}),
        "domains": sorted({v.domain for v in vectors}),
        "models": {
            kind: {"accuracy": r.accuracy, "classification_error": r.classification_error,
                   "auc": r.auc}
            for kind, r in sorted(reports.items())
        },
    }
    if getattr(args, "report", "json") == "csv":
        lines = ["model,accuracy,classification_error,auc"]
        for kind, r in sorted(reports.items()):
            lines.append(f"{kind},{r.accuracy:.12g},{r.classification_error:.12g},{r.auc:.12g}")
        (out / "summary.csv").write_text("\n".join(lines) + "\n", "utf-8")
    else:
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True), "utf-8")

    if getattr(args, "plots", False):
        if reports:
            _emit_eval_plots(out, reports)
        user, domain = getattr(args, "user", None), getattr(args, "domain", None)
        if (not user or not domain) and vectors:
            top = max(vectors, key=lambda v: (v.weight, v.user_id))
            user, domain = user or top.user_id, domain or top.domain
        if user and domain:
            series = ranking.temporal_series(vectors, user, domain)
            svg = plots.temporal_series_svg(series, title=f"W of {user} in {domain}")
            (out / "temporal_w.svg").write_text(svg, "utf-8")


# ------------------------------------------------------------- commands


def cmd_synth(args) -> int:
    out = _outdir(args)
    config = synth.SynthConfig(
        n_users=args.users,
        n_domains=args.domains,
        influencer_fraction=args.influencer_fraction,
        spammer_fraction=args.spammer_fraction,
        posts_per_user=(args.posts_min, args.posts_max),
        separation=args.separation,
        months=args.months,
        seed=args.seed,
        base_month=args.base_month,
        enforce_cleanse_floor=not args.no_cleanse_floor,
    )
    try:
        jsonl, labels_csv = synth.generate_jsonl(config, args.corpus)
    except ValueError as exc:
        raise UserError(str(exc)) from exc
    labels_path = args.labels_out or out / "labels.csv"
    labels_path.parent.mkdir(parents=True, exist_ok=True)
    labels_path.write_text(labels_csv, "utf-8")
    if args.stdout:
        sys.stdout.write(jsonl)
    else:
        (out / "dataset.jsonl").write_text(jsonl, "utf-8")
    return EXIT_OK


def cmd_ingest(args) -> int:
    out = _outdir(args)
    phase_ingest(args, out)
    return EXIT_OK


def cmd_classify(args) -> int:
    out = _outdir(args)
    phase_classify(args, out, _load_cleansed(out))
    return EXIT_OK


def cmd_features(args) -> int:
    out = _outdir(args)
    phase_features(args, out, _load_cleansed(out), _load_windows(out), _load_annotations(out))
    return EXIT_OK


def cmd_rank(args) -> int:
    out = _outdir(args)
    phase_rank(args, out, _load_vectors(out))
    return EXIT_OK


def cmd_train(args) -> int:
    out = _outdir(args)
    phase_train(args, out, _load_vectors(out), _labels_path(args, out))
    return EXIT_OK


def cmd_eval(args) -> int:
    out = _outdir(args)
    phase_eval(args, out, _load_vectors(out), _labels_path(args, out))
    return EXIT_OK


def cmd_report(args) -> int:
    out = _outdir(args)
    phase_report(args, out, _load_vectors(out), None)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    out = _outdir(args)
    started = time.time()
    phases: dict[str, float] = {}

    def mark(name: str, t0: float) -> None:
        phases[name] = round(time.time() - t0, 3)

    t0 = time.time()
    dataset, windows = phase_ingest(args, out)
    mark("ingest", t0)

    t0 = time.time()
    annotations = phase_classify(args, out, dataset)
    mark("classify", t0)

    t0 = time.time()
    vectors = phase_features(args, out, dataset, windows, annotations)
    mark("features", t0)

    t0 = time.time()
    phase_rank(args, out, vectors)
    mark("rank", t0)

    labels_path = args.labels or out / "labels.csv"
    reports = None
    if labels_path.exists():
        t0 = time.time()
        models = phase_train(args, out, vectors, labels_path)
        mark("train", t0)
        t0 = time.time()
        reports = phase_eval(args, out, vectors, labels_path, models)
        mark("eval", t0)
    else:
        logger.warning("no labels file at %s; skipping train/eval", labels_path)

    t0 = time.time()
    phase_report(args, out, vectors, reports)
    mark("report", t0)

    _write_manifest(out, "pipeline", started, phases)
    return EXIT_OK


_COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "classify": cmd_classify,
    "features": cmd_features,
    "rank": cmd_rank,
    "train": cmd_train,
    "eval": cmd_eval,
    "report": cmd_report,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _setup_logging(args.verbose)
    try:
        return _COMMANDS[args.command](args)
    except UserError as exc:
        print(f"socialcred: error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    except ingest.DatasetFormatError as exc:
        print(f"socialcred: error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    except OSError as exc:
        print(f"socialcred: error: {exc}", file=sys.stderr)
        return EXIT_USER_ERROR
    except Exception as exc:  # noqa: BLE001 - last-resort boundary
        logger.exception("internal error")
        print(f"socialcred: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
