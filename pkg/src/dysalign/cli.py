"""Command-line entry point.

Subcommands: simulate, train, align, sta, eval, ablation, phonemes, report.
Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal
error.  Diagnostics go to stderr; data goes to stdout or --out.  Every
written artifact gets a sibling ``<out>.manifest.json`` recording the
resolved configuration, seeds, and paths; re-running the same invocation
reproduces the artifact byte for byte.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .errors import DysalignError, EvalError, ValidationError
from .labels import JointLabelEncoding, alignment_from_labels, format_groups
from .lexicon import demo_texts, line_to_sequence
from .phonemes import Level, TokenSequence, inventory_table
from .simulate import SimulationConfig, read_corpus, simulate_corpus, write_corpus
from .sta import DurationModel, EmissionNoise, run_sta
from .evalkit import (
    AblationSpec,
    alignment_accuracy,
    make_aligner,
    predict_corpus,
    report_to_json,
    run_ablation,
    type_specific_accuracy,
)

logger = logging.getLogger("dysalign")

CONFIG_ENV = "DYSALIGN_CONFIG"


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self.prog + ": error: " + message) from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="dysalign", description=__doc__)
    parser.add_argument("--version", action="version", version=f"dysalign {__version__}")
    parser.add_argument("--config", help="TOML config file (flags take precedence)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phonemes", help="dump the phoneme inventory")
    p.add_argument("--format", choices=("json", "tsv"), default="json")
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="inject dysfluencies into reference texts")
    p.add_argument("--input", help="text file; one reference per line")
    p.add_argument("--demo-sentences", type=int, default=1000,
                   help="with no --input, sample this many demo sentences")
    p.add_argument("--level", choices=("phoneme", "word"), default="phoneme")
    p.add_argument("--proportions", default="1,1,1,1",
                   help="Rep,Ins,Del,Sub weights")
    p.add_argument("--events", default="1,3", help="min,max events per sentence")
    p.add_argument("--max-repeat", type=int, default=3)
    p.add_argument("--n", type=int, help="number of records (default: one per line)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train the neural aligner on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--level", choices=("phoneme", "word"),
                   help="expected corpus level (validated against the data)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-4)

    p = sub.add_parser("align", help="align a dysfluent sequence to a reference")
    p.add_argument("--method", choices=("hard", "soft", "dtw", "neural"), required=True)
    p.add_argument("--model", help="checkpoint for --method neural")
    p.add_argument("--ref", help="reference token string")
    p.add_argument("--dys", help="dysfluent token string")
    p.add_argument("--level", choices=("phoneme", "word"), default="phoneme")
    p.add_argument("--corpus", help="batch mode: align every record in a corpus")
    p.add_argument("--format", choices=("json", "pretty"), default="pretty")
    p.add_argument("--out")

    p = sub.add_parser("sta", help="segment simulated speech against references")
    p.add_argument("--corpus", required=True)
    p.add_argument("--noise", type=float, default=0.0, help="emission leak epsilon")
    p.add_argument("--bias", type=float, default=0.5, help="same-category leak share")
    p.add_argument("--aligner", choices=("hard", "soft", "neural"), default="soft")
    p.add_argument("--model", help="checkpoint for --aligner neural")
    p.add_argument("--frame-ms", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", required=True, help="output report JSON")

    p = sub.add_parser("eval", help="score predictions against a gold corpus")
    p.add_argument("--pred", required=True, help="predictions JSONL")
    p.add_argument("--gold", required=True, help="gold corpus JSONL")
    p.add_argument("--method", default="", help="method name recorded in the report")
    p.add_argument("--out", required=True)

    p = sub.add_parser("ablation", help="proportion ablation grid")
    p.add_argument("--spec", help="TOML file with [[row]] name/proportions entries")
    p.add_argument("--texts", help="reference text file")
    p.add_argument("--demo-sentences", type=int, default=2000)
    p.add_argument("--n-records", type=int, default=5000)
    p.add_argument("--fast", action="store_true",
                   help="1000-record cells for a quick trend check")
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output CSV")

    p = sub.add_parser("report", help="render a report JSON as CSV or text")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("csv", "pretty"), default="pretty")
    p.add_argument("--out")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 1
        return 0 if not exc.code else 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    started = time.time()
    try:
        config = _load_config(args.config)
        handler = {
            "phonemes": _cmd_phonemes,
            "simulate": _cmd_simulate,
            "train": _cmd_train,
            "align": _cmd_align,
            "sta": _cmd_sta,
            "eval": _cmd_eval,
            "ablation": _cmd_ablation,
            "report": _cmd_report,
        }[args.command]
        handler(args, config, argv, started)
        return 0
    except (DysalignError, FileNotFoundError) as exc:
        print(f"dysalign {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal error
        logger.exception("internal error")
        print(f"dysalign {args.command}: internal error: {exc}", file=sys.stderr)
        return 3


def _load_config(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _cfg_get(args, config: dict, key: str, default):
    """flags > config file > defaults; flag wins when it differs from default."""
    flag = getattr(args, key.replace("-", "_"), None)
    section = config.get(args.command, {})
    if flag is not None and flag != default:
        return flag
    if key in section:
        return section[key]
    return flag if flag is not None else default


def _emit(text: str, out: str | None) -> None:
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_manifest(out_path: str, args, argv, started, config: dict,
                    inputs: list[str], seeds: dict) -> None:
    manifest = {
        "subcommand": args.command,
        "argv": argv,
        "config": config,
        "seeds": seeds,
        "inputs": inputs,
        "outputs": [out_path],
        "tool_version": __version__,
        "wall_time_s": round(time.time() - started, 3),
    }
    _atomic_write(
        out_path + ".manifest.json",
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
    )


def _resolved(args, skip=("command", "verbose", "config")) -> dict:
    return {
        k: v for k, v in sorted(vars(args).items()) if k not in skip
    }


# -- subcommands --------------------------------------------------------------

def _cmd_phonemes(args, config, argv, started):
    rows = inventory_table()
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        text = "".join(f"{r['symbol']}\t{r['category']}\n" for r in rows)
    _emit(text, args.out)
    if args.out:
        _write_manifest(args.out, args, argv, started, _resolved(args), [], {})


def _parse_floats(text: str, n: int, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ValidationError(f"cannot parse {what}: {text!r}") from None
    if len(vals) != n:
        raise ValidationError(f"{what} needs {n} comma-separated values")
    return vals


def _load_texts(args, level: Level) -> list[TokenSequence]:
    path = getattr(args, "input", None) or getattr(args, "texts", None)
    if path:
        texts = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    seq = line_to_sequence(line, level, strict=False)
                except DysalignError as exc:
                    raise ValidationError(f"line {lineno}: {exc}") from None
                if len(seq) < 2:
                    logger.warning("line %d: too short after lookup, skipped", lineno)
                    continue
                texts.append(seq)
        if not texts:
            raise ValidationError(f"no usable reference lines in {path}")
        return texts
    n = getattr(args, "demo_sentences", 1000)
    return [
        line_to_sequence(t, level) for t in demo_texts(n, seed=args.seed)
    ]


def _cmd_simulate(args, config, argv, started):
    level = Level(_cfg_get(args, config, "level", "phoneme"))
    proportions = _parse_floats(
        _cfg_get(args, config, "proportions", "1,1,1,1"), 4, "proportions"
    )
    ev = _cfg_get(args, config, "events", "1,3")
    lo, hi = (int(x) for x in str(ev).split(","))
    cfg = SimulationConfig(
        level=level,
        proportions=proportions,
        events_per_sentence=(lo, hi),
        max_repeat=int(_cfg_get(args, config, "max-repeat", 3)),
        seed=int(_cfg_get(args, config, "seed", 0)),
    )
    texts = _load_texts(args, level)
    records = simulate_corpus(texts, cfg, args.n)
    write_corpus(records, args.out)
    _write_manifest(args.out, args, argv, started, _resolved(args),
                    [args.input] if args.input else [], {"seed": cfg.seed})
    print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)


def _cmd_train(args, config, argv, started):
    from .neural.model import EncoderConfig
    from .neural.tokenizer import build_tokenizer
    from .neural.training import TrainConfig, train
    from .neural.checkpoint import save_checkpoint

    records = read_corpus(args.corpus)
    if not records:
        raise ValidationError("corpus is empty")
    level = records[0].level
    if args.level and Level(args.level) is not level:
        raise ValidationError(
            f"--level {args.level} but the corpus is {level.value}-level"
        )
    seqs = [r.reference for r in records] + [r.dysfluent for r in records]
    tokenizer = build_tokenizer(level, seqs)
    train_cfg = TrainConfig(
        batch_size=int(_cfg_get(args, config, "batch-size", 32)),
        epochs=int(_cfg_get(args, config, "epochs", 15)),
        learning_rate=float(_cfg_get(args, config, "lr", 1e-4)),
        seed=int(_cfg_get(args, config, "seed", 0)),
    )
    ckpt = train(records, tokenizer, EncoderConfig(), train_cfg)
    save_checkpoint(ckpt, args.out)
    _write_manifest(args.out, args, argv, started, _resolved(args),
                    [args.corpus], {"seed": train_cfg.seed})
    print(
        f"trained on {len(records)} records; final loss "
        f"{ckpt.metadata['final_loss']:.6f}; wrote {args.out}",
        file=sys.stderr,
    )


def _load_checkpoint_arg(args):
    from .neural.checkpoint import load_checkpoint

    if not args.model:
        raise ValidationError("--method/--aligner neural requires --model")
    return load_checkpoint(args.model)


def _cmd_align(args, config, argv, started):
    checkpoint = _load_checkpoint_arg(args) if args.method == "neural" else None
    if args.corpus:
        records = read_corpus(args.corpus)
        preds = predict_corpus(args.method, records, checkpoint)
        lines = [
            json.dumps(
                {
                    "id": r.id,
                    "ref_labels": list(p.ref_labels),
                    "dys_labels": list(p.dys_labels),
                },
                sort_keys=True,
            )
            for r, p in zip(records, preds)
        ]
        _emit("\n".join(lines) + "\n", args.out)
        if args.out:
            _write_manifest(args.out, args, argv, started, _resolved(args),
                            [args.corpus], {})
        return
    if not args.ref or not args.dys:
        raise ValidationError("provide --ref and --dys, or --corpus")
    level = Level(args.level)
    ref = line_to_sequence(args.ref, level)
    dys = line_to_sequence(args.dys, level)
    aligner = make_aligner(args.method, checkpoint)
    labels = aligner(ref, dys)
    gold = alignment_from_labels(labels, ref, dys)
    if args.format == "json":
        payload = {
            "ref": ref.text(),
            "dys": dys.text(),
            "ref_labels": list(labels.ref_labels),
            "dys_labels": list(labels.dys_labels),
            "groups": [list(g) for g in gold.groups],
            "pretty": format_groups(gold, ref, dys),
        }
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit(format_groups(gold, ref, dys) + "\n", args.out)
    if args.out:
        _write_manifest(args.out, args, argv, started, _resolved(args), [], {})


def _cmd_sta(args, config, argv, started):
    records = read_corpus(args.corpus)
    checkpoint = _load_checkpoint_arg(args) if args.aligner == "neural" else None
    aligner = make_aligner(args.aligner, checkpoint)
    report = run_sta(
        records,
        aligner,
        noise=EmissionNoise(args.noise, args.bias, seed=args.seed),
        durations=DurationModel(),
        frame_ms=args.frame_ms,
    )
    report["aligner"] = args.aligner
    _atomic_write(args.report, report_to_json(report) + "\n")
    _write_manifest(args.report, args, argv, started, _resolved(args),
                    [args.corpus], {"seed": args.seed})
    rmse = report["overall"]["rmse_ms"]
    print(
        f"sta over {report['n_records']} records: recovery "
        f"{report['recovery_rate']:.3f}, overall rmse "
        f"{'n/a' if rmse is None else f'{rmse:.2f} ms'}",
        file=sys.stderr,
    )


def _read_predictions(path) -> list[tuple[int, JointLabelEncoding]]:
    preds = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                preds.append(
                    (
                        int(obj["id"]),
                        JointLabelEncoding(
                            tuple(obj["ref_labels"]), tuple(obj["dys_labels"])
                        ),
                    )
                )
            except (ValueError, KeyError, DysalignError) as exc:
                raise ValidationError(f"line {lineno}: {exc}") from None
    return preds


def _cmd_eval(args, config, argv, started):
    gold = read_corpus(args.gold)
    preds = _read_predictions(args.pred)
    acc = alignment_accuracy(preds, gold, method=args.method)
    types = type_specific_accuracy(preds, gold)
    payload = {"alignment": acc.as_dict(), "types": types.as_dict()}
    _atomic_write(args.out, report_to_json(payload) + "\n")
    _write_manifest(args.out, args, argv, started, _resolved(args),
                    [args.pred, args.gold], {})
    print(
        f"exact {acc.sequence_exact_match:.4f}, token {acc.token_label_accuracy:.4f} "
        f"over {acc.n_records} records",
        file=sys.stderr,
    )


def _load_ablation_spec(path: str | None) -> AblationSpec:
    if not path:
        return AblationSpec()
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    rows = []
    for row in doc.get("row", []):
        try:
            rows.append((str(row["name"]), tuple(float(x) for x in row["proportions"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad ablation row {row!r}: {exc}") from None
    if not rows:
        raise ValidationError("ablation spec has no [[row]] entries")
    return AblationSpec(tuple(rows))


def _cmd_ablation(args, config, argv, started):
    from .neural.training import TrainConfig

    spec = _load_ablation_spec(args.spec)
    texts = _load_texts(args, Level.PHONEME)
    n_records = 1000 if args.fast else args.n_records
    result = run_ablation(
        texts,
        spec,
        n_records=n_records,
        seed=args.seed,
        train_cfg=TrainConfig(epochs=args.epochs, seed=args.seed),
    )
    _atomic_write(args.out, result.to_csv())
    _write_manifest(args.out, args, argv, started, _resolved(args),
                    [args.texts] if args.texts else [], {"seed": args.seed})
    print(f"wrote ablation grid to {args.out}", file=sys.stderr)


def _cmd_report(args, config, argv, started):
    with open(args.infile, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if args.format == "csv":
        rows = _flatten_report(doc)
        text = "key,value\n" + "".join(f"{k},{v}\n" for k, v in rows)
    else:
        text = _pretty_report(doc)
    _emit(text, args.out)
    if args.out:
        _write_manifest(args.out, args, argv, started, _resolved(args),
                        [args.infile], {})


def _flatten_report(doc, prefix="") -> list[tuple[str, str]]:
    rows: list[tuple[str, str]] = []
    if isinstance(doc, dict):
        for k in sorted(doc):
            rows.extend(_flatten_report(doc[k], f"{prefix}{k}."))
    else:
        rows.append((prefix.rstrip("."), json.dumps(doc)))
    return rows


def _pretty_report(doc) -> str:
    lines = [f"{k} = {v}" for k, v in _flatten_report(doc)]
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    raise SystemExit(main())
