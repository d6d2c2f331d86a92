"""Command-line interface.

Exit codes: 0 success, 1 audit failed, 2 I/O error, 3 data error (bad
embedding file, OOV under ``--oov-policy error``), 4 bad flags.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import calibration, geometry, verifier
from ._atomic import atomic_write
from .embeddings import EmbeddingModel, LoadOptions, load_embeddings, save_cache
from .embeddings.cache import load_cache
from .errors import DxPrivacyError, WordNotFoundError
from .mechanism import MechanismConfig, count_oov, detokenize, perturb_corpus, tokenize
from .noise import RandomStream

log = logging.getLogger("dxprivacy")

EXIT_OK, EXIT_AUDIT_FAILED, EXIT_IO, EXIT_DATA, EXIT_USAGE = 0, 1, 2, 3, 4
EMBEDDING_DIR_ENV = "DXPRIVACY_EMBEDDING_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- flag parsing helpers -----------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}")


def _word_list(text: str) -> list[str]:
    return [w for w in text.split(",") if w]


def _positive_float(text: str) -> float:
    v = float(text)
    if not (v > 0 and np.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _resolve_embedding_path(path: str) -> Path:
    p = Path(path)
    if not p.is_absolute() and not p.exists():
        base = os.environ.get(EMBEDDING_DIR_ENV)
        if base and (Path(base) / p).exists():
            return Path(base) / p
    return p


def _load_model(args) -> EmbeddingModel:
    opts = LoadOptions(
        expect_header=args.header,
        lowercase=args.lowercase,
        max_words=args.max_words,
        on_duplicate=args.on_duplicate,
    )
    path = _resolve_embedding_path(args.embeddings)
    model = load_embeddings(path, opts)
    log.info("loaded %s: %d words, dim %d", path, len(model), model.dim)
    return model


@contextlib.contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
        sys.stdout.flush()
    else:
        with atomic_write(path) as fh:
            yield fh


def _add_embedding_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embeddings", "-e", required=True,
                   help=f"text embedding file or binary cache (relative paths also "
                        f"searched in ${EMBEDDING_DIR_ENV})")
    p.add_argument("--header", action="store_true", help="file starts with a '<count> <dim>' line")
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--max-words", type=_positive_int)
    p.add_argument("--on-duplicate", choices=["keep-first", "error"], default="keep-first")


# -- commands -------------------------------------------------------------------

def cmd_privatize(args) -> int:
    model = _load_model(args)
    cfg = MechanismConfig(args.epsilon, oov_policy=args.oov_policy, record_trace=args.trace is not None)
    try:
        if args.input in (None, "-"):
            raw = sys.stdin.read()
        else:
            raw = Path(args.input).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        print(f"error: cannot read input: {e}", file=sys.stderr)
        return EXIT_IO
    # split on newline only; str.splitlines would also break on U+2028 etc.
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    tokenized = [tokenize(line) for line in lines]
    step = args.batch_lines
    chunks = [(s, tokenized[s : s + step]) for s in range(0, len(tokenized), step)]

    def run(chunk):
        start, part = chunk
        return perturb_corpus(model, cfg, part, args.seed, start_index=start)

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = [r for part in pool.map(run, chunks) for r in part]
    else:
        results = [r for c in chunks for r in run(c)]

    oov = 0
    with contextlib.ExitStack() as stack:
        out = stack.enter_context(_output(args.output))
        trace = stack.enter_context(atomic_write(args.trace)) if args.trace else None
        for lineno, (tokens, records) in enumerate(results):
            out.write(detokenize(tokens) + "\n")
            oov += count_oov(records)
            if trace is not None:
                for r in records:
                    trace.write(json.dumps({"line": lineno, **r.to_dict()}) + "\n")
    if oov:
        log.warning("%d out-of-vocabulary tokens were left unprotected (%s)", oov, args.oov_policy)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    model = _load_model(args)
    if args.words:
        words = args.words
    else:
        size = min(args.sample_size, len(model))
        words = calibration.sample_words(model, size, args.seed)
    result = calibration.sweep(
        model, args.epsilons, words, args.runs, args.seed,
        eta=args.eta, workers=args.workers,
    )
    summary = calibration.worst_case_summary(result, bins=args.bins)
    with _output(args.output) as fh:
        if args.format == "json":
            fh.write(calibration.sweep_to_json(result, bins=args.bins) + "\n")
        else:
            calibration.write_sweep_csv(result, fh)
    print(f"sample of {len(result.words)} words, seed {args.seed}, {args.runs} runs each",
          file=sys.stderr)
    print(calibration.format_summary(summary), file=sys.stderr)
    return EXIT_OK


def cmd_knn_stats(args) -> int:
    model = _load_model(args)
    words = None
    if args.sample_size is not None and args.sample_size < len(model):
        words = calibration.sample_words(model, args.sample_size, args.seed)
    table = geometry.knn_distance_table(model, args.ks, args.percentiles, words, workers=args.workers)
    if not table.is_monotone():
        log.warning("k-NN distance table is not monotone; this indicates a bug")
    with _output(args.output) as fh:
        if args.format == "json":
            doc = {
                "ks": list(table.ks),
                "percentiles": list(table.percentiles),
                "cells": table.cells.tolist(),
                "sample_size": table.sample_size,
            }
            fh.write(json.dumps(doc, indent=2) + "\n")
        else:
            table.write_csv(fh)
    if args.histogram:
        hist = geometry.knn_distance_histogram(model, args.histogram_k, args.bins, words, workers=args.workers)
        with atomic_write(args.histogram) as fh:
            json.dump({"k": args.histogram_k, "sample_size": table.sample_size, **hist.to_dict()}, fh, indent=2)
            fh.write("\n")
    return EXIT_OK


def cmd_audit(args) -> int:
    model = _load_model(args)
    words = args.words or list(model.words)
    if len(words) > args.max_vocab:
        raise UsageError(
            f"audit of {len(words)} words exceeds --max-vocab {args.max_vocab}; "
            "pass --words to choose a subset"
        )
    cfg = verifier.AuditConfig(args.samples, args.min_count, args.sigmas)
    report = verifier.audit_model(model, args.epsilons, cfg, args.seed, words, mutant=args.mutant)
    doc = report.to_dict()
    passed = report.passed
    if args.composition:
        comps = []
        for ei, eps in enumerate(args.epsilons):
            res = verifier.audit_composition(
                model, eps, args.composition, cfg, RandomStream(args.seed, (1 << 20, ei)),
                tolerance=args.tv_tolerance, mutant=args.mutant,
            )
            comps.append(res.to_dict())
            passed = passed and res.passed
        doc["composition"] = comps
        doc["verdict"] = "pass" if passed else "fail"
    with _output(args.output) as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")
    print(f"audit {doc['verdict']}: {doc['pairs_failed']} of {doc['pairs_checked']} pairs failed",
          file=sys.stderr)
    return EXIT_OK if passed else EXIT_AUDIT_FAILED


def cmd_cache_build(args) -> int:
    model = _load_model(args)
    save_cache(model, args.output)
    print(f"wrote {args.output}: {len(model)} words, dim {model.dim}", file=sys.stderr)
    return EXIT_OK


def cmd_cache_info(args) -> int:
    model = load_cache(args.path)
    print(json.dumps({"name": model.name, "words": len(model), "dim": model.dim}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dxprivacy", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("privatize", help="perturb a corpus, one record per line")
    _add_embedding_flags(p)
    p.add_argument("--epsilon", type=_positive_float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", "-i", help="input file (default stdin)")
    p.add_argument("--output", "-o", help="output file (default stdout)")
    p.add_argument("--trace", help="write per-token records as JSON lines")
    p.add_argument("--oov-policy", choices=["passthrough", "drop", "error"], default="passthrough")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--batch-lines", type=_positive_int, default=1024)
    p.set_defaults(func=cmd_privatize)

    p = sub.add_parser("calibrate", help="deniability statistics over an epsilon grid")
    _add_embedding_flags(p)
    p.add_argument("--epsilons", type=_float_list, required=True)
    p.add_argument("--words", type=_word_list, help="comma-separated words (overrides sampling)")
    p.add_argument("--sample-size", type=_positive_int, default=100)
    p.add_argument("--runs", type=_positive_int, default=1000)
    p.add_argument("--eta", type=float, default=calibration.DEFAULT_ETA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--bins", type=_positive_int, default=20)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("knn-stats", help="k-th nearest neighbour distance percentiles")
    _add_embedding_flags(p)
    p.add_argument("--ks", type=_int_list, default=list(geometry.DEFAULT_KS))
    p.add_argument("--percentiles", type=_float_list, default=list(geometry.DEFAULT_PERCENTILES))
    p.add_argument("--sample-size", type=_positive_int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--histogram", help="also write a JSON histogram of the k-th distance")
    p.add_argument("--histogram-k", type=_positive_int, default=10)
    p.add_argument("--bins", type=_positive_int, default=50)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_knn_stats)

    p = sub.add_parser("audit", help="empirically check the privacy bound on a small vocabulary")
    _add_embedding_flags(p)
    p.add_argument("--epsilons", type=_float_list, required=True)
    p.add_argument("--words", type=_word_list)
    p.add_argument("--samples", type=_positive_int, default=1_000_000)
    p.add_argument("--min-count", type=_positive_int, default=100)
    p.add_argument("--sigmas", type=_positive_float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-vocab", type=_positive_int, default=100)
    p.add_argument("--composition", type=_word_list, help="two comma-separated words")
    p.add_argument("--tv-tolerance", type=_positive_float, default=0.01)
    p.add_argument("--mutant", choices=sorted(verifier.MUTANTS), default="none",
                   help=argparse.SUPPRESS)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("cache", help="binary embedding cache")
    csub = p.add_subparsers(dest="cache_command", required=True, parser_class=_Parser)
    c = csub.add_parser("build", help="convert a text embedding file to a cache")
    _add_embedding_flags(c)
    c.add_argument("--output", "-o", required=True)
    c.set_defaults(func=cmd_cache_build)
    c = csub.add_parser("info", help="print cache metadata")
    c.add_argument("path")
    c.set_defaults(func=cmd_cache_info)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "composition", None) is not None and len(args.composition) != 2:
        print("error: --composition takes exactly two words", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except WordNotFoundError as e:
        line = getattr(e, "line", None)
        where = f"line {line + 1}, " if line is not None else ""
        pos = f"position {e.position}, " if e.position is not None else ""
        print(f"error: {where}{pos}out-of-vocabulary token {e.word!r}", file=sys.stderr)
        return EXIT_DATA
    except (DxPrivacyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
