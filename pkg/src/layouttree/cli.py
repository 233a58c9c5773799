"""``ltk`` command line: validate, stats, decode, eval, sweep, report."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

from . import __version__
from .decoding import DecodeConfig, decode_beam, decode_greedy
from .ingest import (
    DATA_ENV,
    SPLITS,
    DatasetSplit,
    ParseError,
    ValidationError,
    default_data_dir,
    dumps_record,
    load_split,
    split_path,
)
from .metrics import AXES, IdMismatch, evaluate
from .model import LayoutTree, Poster, RelationKind
from .report import count_histogram, score_histogram, write_stats_report
from .scoring import ScoreError, heuristic_scores, load_scores, noisy_oracle, oracle_scores
from .statistics import EmptySplit

log = logging.getLogger("layouttree")

MANIFEST = "manifest.json"


# -- helpers ------------------------------------------------------------------------


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the time for byte-reproducible manifests
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch else _dt.datetime.now(_dt.timezone.utc)
    return now.isoformat(timespec="seconds")


def write_manifest(out: Path, command: str, config: dict, inputs: Sequence[Path]) -> Path:
    """Record how ``out`` was produced; only ``timestamp`` varies unless SOURCE_DATE_EPOCH is set."""
    outputs = sorted(p for p in out.rglob("*") if p.is_file() and p.name != MANIFEST)
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): sha256(p) for p in sorted(set(inputs))},
        "outputs": {str(p.relative_to(out)): sha256(p) for p in outputs},
        "version": __version__,
        "timestamp": _timestamp(),
    }
    path = out / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _data_root(args) -> Path:
    root = args.data or default_data_dir()
    if root is None:
        raise SystemExit(f"error: no --data given and {DATA_ENV} is unset")
    return Path(root)


def _split_names(path: Path, split: str) -> list[str]:
    if split != "all":
        return [split]
    if not path.is_dir():
        raise SystemExit("error: --split all needs a dataset directory")
    names = [s for s in SPLITS if split_path(path, s).exists()]
    if not names:
        raise EmptySplit(f"{path}: no split files")
    return names


def _load(path: Path, split: str, strict: bool) -> tuple[list[tuple[Poster, LayoutTree]], list[Path]]:
    samples, files = [], []
    for name in _split_names(path, split):
        s = load_split(path, name, strict=strict)
        samples.extend(s.posters)
        files.append(split_path(path, name))
    return samples, files


def _map(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _config(args) -> dict:
    # outputs are listed relative to --out, so the directory itself is not recorded
    skip = {"func", "verbose", "out"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k not in skip}


# -- decoding worker -------------------------------------------------------------------


def _scores_for(poster: Poster, tree: LayoutTree, opts: dict):
    scorer = opts["scorer"]
    if opts.get("scores"):
        return load_scores(Path(opts["scores"]) / f"{poster.poster_id}.scores")
    if scorer == "oracle":
        return oracle_scores(tree, opts["margin"])
    if scorer == "noisy":
        return noisy_oracle(tree, opts["margin"], opts["noise_sd"], opts["seed"])
    if scorer == "heuristic":
        return heuristic_scores(poster)
    raise ValueError(f"unknown scorer {scorer!r}")


def _decode_one(job) -> dict:
    poster, tree, opts = job
    try:
        sp = _scores_for(poster, tree, opts)
        if sp.n != poster.n:
            raise ScoreError(f"scores cover {sp.n} boxes, poster has {poster.n}")
    except (OSError, ScoreError) as exc:
        return {"poster_id": poster.poster_id, "error": f"{type(exc).__name__}: {exc}"}
    if opts["greedy"]:
        res = decode_greedy(sp)
    else:
        cfg = DecodeConfig(opts["beam_width"], opts["normalize"], trace=opts["trace"])
        res = decode_beam(sp, cfg)
    return {"poster_id": poster.poster_id, "tree": res.tree, "order_score": res.order_score,
            "parent_score": res.parent_score, "ties": res.ties, "trace": res.beam_trace}


def decode_samples(samples, opts: dict, jobs: int = 1) -> list[dict]:
    return _map(_decode_one, [(p, t, opts) for p, t in samples], jobs)


def _normalize_flag(value: str) -> str:
    return {"raw": "raw", "raw-sum": "raw", "logsoftmax": "logsoftmax", "log-softmax": "logsoftmax"}[value]


# -- commands -----------------------------------------------------------------------


def cmd_validate(args) -> int:
    root = _data_root(args)
    errors: list[dict] = []
    total = 0
    for name in _split_names(root, args.split):
        try:
            s = load_split(root, name, strict=args.strict)
            total += len(s)
            for loc, note in s.diagnostics:
                print(json.dumps({"level": "warning", "locator": loc, "message": note}))
        except ValidationError as exc:
            errors += [{"level": "error", "locator": loc, "message": msg} for loc, msg in exc.errors]
        except (ParseError, EmptySplit, FileNotFoundError) as exc:
            errors.append({"level": "error", "locator": name, "message": str(exc)})
    for e in errors:
        print(json.dumps(e))
    if errors:
        print(f"{len(errors)} invalid record(s)", file=sys.stderr)
        return 1
    print(f"{total} posters OK")
    return 0


def cmd_stats(args) -> int:
    root = _data_root(args)
    samples, files = _load(root, args.split, args.strict)
    if not samples:
        raise EmptySplit(f"{root}: no posters")
    out = Path(args.out)
    write_stats_report(samples, out, include_root=args.include_root, ddof=1 if args.sample_sd else 0)
    write_manifest(out, "stats", _config(args), files)
    print(f"wrote statistics for {len(samples)} posters to {out}")
    return 0


def cmd_decode(args) -> int:
    root = _data_root(args)
    samples, files = _load(root, args.split, args.strict)
    opts = {
        "scorer": args.scorer, "scores": str(args.scores) if args.scores else None, "margin": args.margin,
        "noise_sd": args.noise_sd, "seed": args.seed, "beam_width": args.beam_width,
        "normalize": _normalize_flag(args.normalize), "greedy": args.greedy, "trace": bool(args.trace),
    }
    results = decode_samples(samples, opts, args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failures = [r for r in results if "error" in r]
    if failures and args.strict:
        for r in failures:
            print(json.dumps({"level": "error", "locator": r["poster_id"], "message": r["error"]}), file=sys.stderr)
        return 1
    by_id = {p.poster_id: p for p, _ in samples}
    with (out / "predictions.jsonl").open("w", encoding="utf-8", newline="\n") as f:
        for r in results:
            if "tree" in r:
                f.write(dumps_record(by_id[r["poster_id"]], r["tree"]) + "\n")
    with (out / "decode_scores.csv").open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["poster_id", "order_score", "parent_score", "tie_steps"])
        for r in results:
            if "tree" in r:
                w.writerow([r["poster_id"], repr(r["order_score"]), repr(r["parent_score"]), r["ties"]])
    (out / "diagnostics.json").write_text(
        json.dumps([{"poster_id": r["poster_id"], "error": r["error"]} for r in failures], indent=2) + "\n",
        encoding="utf-8")
    if args.trace:
        trace = {r["poster_id"]: r["trace"] for r in results if r.get("trace") is not None}
        Path(args.trace).write_text(json.dumps(trace) + "\n", encoding="utf-8")
    inputs = list(files)
    if args.scores:
        inputs += sorted(Path(args.scores).glob("*.scores"))
    write_manifest(out, "decode", _config(args), inputs)
    tied = sum(1 for r in results if r.get("ties"))
    print(f"decoded {len(results) - len(failures)} posters ({len(failures)} skipped, {tied} decided partly by "
          f"tie-breaks) into {out / 'predictions.jsonl'}")
    return 0


def _load_pair(args):
    gt_samples, gt_files = _load(Path(args.gt), args.split, args.strict)
    pred = load_split(Path(args.pred), "predictions", strict=args.strict)
    return gt_samples, {p.poster_id: t for p, t in pred.posters}, gt_files + [split_path(Path(args.pred), "predictions")]


def cmd_eval(args) -> int:
    gt_samples, preds, files = _load_pair(args)
    try:
        report = evaluate(gt_samples, preds, labels=args.labels)
    except IdMismatch as exc:
        print(json.dumps({"level": "error", "missing": exc.missing, "extra": exc.extra}), file=sys.stderr)
        return 2
    out = Path(args.out)
    report.write(out)
    write_manifest(out, "eval", _config(args), files)
    agg = report.aggregate
    print(f"posters={agg['posters']} STEDS={agg['steds']:.2f} REDS={agg['reds']:.2f} TED={agg['ted']:.2f}")
    return 0


def cmd_report(args) -> int:
    gt_samples, preds, files = _load_pair(args)
    try:
        report = evaluate(gt_samples, preds, labels=args.labels)
    except IdMismatch as exc:
        print(json.dumps({"level": "error", "missing": exc.missing, "extra": exc.extra}), file=sys.stderr)
        return 2
    out = Path(args.out)
    report.write(out)
    hists = {
        "steds": score_histogram([p.steds for p in report.per_poster]),
        "reds": score_histogram([p.reds for p in report.per_poster]),
        "ted": count_histogram([p.ted for p in report.per_poster]),
    }
    for name, rows in hists.items():
        with (out / f"{name}_histogram.csv").open("w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["bin", "posters"])
            w.writerows(rows)
    agg = report.aggregate
    lines = ["# Evaluation report", "",
             f"Posters: {agg['posters']}", "",
             "| STEDS | REDS | TED |", "|---:|---:|---:|",
             f"| {agg['steds']:.2f} | {agg['reds']:.2f} | {agg['ted']:.2f} |", ""]
    for (kind, axis), acc in report.breakdowns.items():
        lines += [f"## {kind.value} accuracy by {axis}", "", "| bucket | correct | total | accuracy |",
                  "|---|---:|---:|---:|"]
        for row in acc.rows():
            acc_s = f"{100 * float(row['accuracy']):.1f}" if row["accuracy"] else "-"
            lines.append(f"| {row['bucket']} | {row['correct']} | {row['total']} | {acc_s} |")
        lines.append("")
    for name, rows in hists.items():
        lines += [f"## {name.upper()} histogram", "", "| bin | posters |", "|---|---:|"]
        lines += [f"| {b} | {c} |" for b, c in rows] + [""]
    (out / "report.md").write_text("\n".join(lines), encoding="utf-8")
    write_manifest(out, "report", _config(args), files)
    print(f"report written to {out / 'report.md'}")
    return 0


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.replace(" ", "").split(",") if x]


def cmd_sweep(args) -> int:
    root = _data_root(args)
    samples, files = _load(root, args.split, args.strict)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in args.seeds:
        for width in args.widths:
            opts = {"scorer": args.scorer, "scores": None, "margin": args.margin, "noise_sd": args.noise_sd,
                    "seed": seed, "beam_width": width, "normalize": _normalize_flag(args.normalize),
                    "greedy": False, "trace": False}
            results = decode_samples(samples, opts, args.jobs)
            preds = {r["poster_id"]: r["tree"] for r in results}
            rep = evaluate(samples, preds)
            agg = rep.aggregate
            mean_order = sum(r["order_score"] for r in results) / len(results)
            rows.append([width, seed, agg["posters"], f"{agg['steds']:.6f}", f"{agg['reds']:.6f}",
                         f"{agg['ted']:.6f}", f"{mean_order:.6f}"])
    with (out / "sweep.csv").open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["beam_width", "seed", "posters", "steds", "reds", "ted", "mean_order_score"])
        w.writerows(rows)
    write_manifest(out, "sweep", _config(args), files)
    print(f"wrote {len(rows)} sweep cells to {out / 'sweep.csv'}")
    return 0


# -- parser -------------------------------------------------------------------------


def _shared(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--data", type=Path, default=None, help=f"dataset directory or split file (default: ${DATA_ENV})")
    p.add_argument("--split", default="test", help="split name, or 'all' for every split present")
    p.add_argument("--out", type=Path, required=out_required, help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--strict", action="store_true", help="fail on the first invalid record or poster")
    p.add_argument("--seed", type=int, default=0)


def _scorer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scorer", choices=["oracle", "noisy", "heuristic"], default="oracle")
    p.add_argument("--margin", type=float, default=1.0)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--normalize", choices=["raw", "raw-sum", "logsoftmax", "log-softmax"], default="logsoftmax")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltk", description="Layout tree decoding, evaluation and statistics.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a canonical dataset")
    _shared(p, out_required=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="dataset statistics tables and heatmaps")
    _shared(p)
    p.add_argument("--include-root", action="store_true", help="count relations touching the Root in heatmaps")
    p.add_argument("--sample-sd", action="store_true", help="use the sample (n-1) standard deviation")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("decode", help="decode trees from score matrices")
    _shared(p)
    _scorer_flags(p)
    p.add_argument("--scores", type=Path, default=None, help="directory of <poster_id>.scores files")
    p.add_argument("--beam-width", type=int, default=20)
    p.add_argument("--greedy", action="store_true", help="plain greedy decoding")
    p.add_argument("--trace", type=Path, default=None, help="dump beam hypotheses to this JSON file")
    p.set_defaults(func=cmd_decode)

    for name, func, help_ in (("eval", cmd_eval, "score predictions against ground truth"),
                              ("report", cmd_report, "evaluation report with score histograms")):
        p = sub.add_parser(name, help=help_)
        _shared(p)
        p.add_argument("--gt", type=Path, required=True, help="ground-truth dataset directory or file")
        p.add_argument("--pred", type=Path, required=True, help="predictions file (canonical format)")
        p.add_argument("--labels", choices=["id", "category"], default="id", help="TED node labels")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="aggregate metrics over beam widths and seeds")
    _shared(p)
    _scorer_flags(p)
    p.set_defaults(scorer="noisy")
    p.add_argument("--widths", type=_int_list, default=[1, 5, 10, 15, 20, 25, 30])
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, ParseError, EmptySplit, FileNotFoundError, ScoreError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
