"""Command-line pipelines: ingest, split, score, train and decode.

Exit codes: 0 success, 1 usage error, 2 data error. Every run emits a
JSON run manifest (command, configuration, seeds, input digests) to
``--run-manifest`` or, when that is not given, to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from headline_bench import baseline, corpus, humaneval, mechanisms, metrics
from headline_bench.corpus import CorpusError, normalize, read_articles, write_articles
from headline_bench.humaneval import VoteError
from headline_bench.metrics import MetricsError
from headline_bench.seq2seq import beam as pgn_beam
from headline_bench.seq2seq import gradcheck, pgn
from headline_bench.seq2seq import training as pgn_train
from headline_bench.tokenization import BpeError, Vocab, bpe_train, word_tokenize

log = logging.getLogger("headline_bench")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
DATA_ERRORS = (CorpusError, MetricsError, VoteError, BpeError, pgn.PgnError, OSError, json.JSONDecodeError,
               KeyError, UnicodeDecodeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n\n{self.format_help()}")


def _digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _tokens(text: str) -> tuple[str, ...]:
    return word_tokenize(normalize(text)).tokens


def _select(articles, args):
    if getattr(args, "manifest", None):
        return corpus.SplitManifest.load(args.manifest).select(articles, args.partition)
    return articles


def _write_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")


def cmd_ingest(args):
    loader = corpus.load_ria if args.format == "ria" else corpus.load_lenta
    loaded = loader(args.input)
    write_articles(loaded.articles, args.out)
    print(f"{len(loaded.articles)} articles written, {loaded.skipped} skipped")
    return {"n_articles": len(loaded.articles), "skipped": loaded.skipped}


def cmd_split(args):
    ratios = _parse_ratios(args.ratios)
    arts = read_articles(args.input)
    manifest = corpus.split_dataset(arts, ratios, args.seed)
    manifest.save(args.out)
    if args.parts_dir:
        out_dir = Path(args.parts_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for part in corpus.PARTITIONS:
            write_articles(manifest.select(arts, part), out_dir / f"{part}.jsonl")
    print("counts (train, val, test):", manifest.counts)
    return {"counts": list(manifest.counts)}


def _parse_ratios(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(x) for x in text.split(":"))
    except ValueError:
        raise UsageError(f"--ratios must look like 90:5:5, got {text!r}") from None
    if len(parts) != 3:
        raise UsageError(f"--ratios needs three parts, got {text!r}")
    return parts


def cmd_train_bpe(args):
    arts = read_articles(args.input)
    fields = ("title", "text") if args.field == "both" else (args.field,)
    seqs = [_tokens(getattr(a, f)) for a in arts for f in fields]
    model = bpe_train(seqs, args.num_merges)
    model.save(args.out)
    print(f"{len(model.merges)} merges, vocabulary {len(model.vocab)}")
    return {"merges": len(model.merges), "vocab_size": len(model.vocab)}


def cmd_baseline(args):
    arts = _select(read_articles(args.input), args)
    lines = baseline.run_baseline(arts, args.generator, args.out, max_tokens=args.max_tokens)
    print(f"{len(lines)} headlines written to {args.out}")
    return {"n_predictions": len(lines)}


def cmd_evaluate(args):
    arts = _select(read_articles(args.refs), args)
    hyps = baseline.read_predictions(args.hyps)
    if len(hyps) != len(arts):
        raise MetricsError(f"{args.hyps}: {len(hyps)} predictions for {len(arts)} references")
    sources = None if args.no_sources else [a.text for a in arts]
    report = metrics.evaluate_corpus([a.title for a in arts], hyps, sources, jobs=args.jobs,
                                     smooth_bleu=args.smooth_bleu)
    out = report.to_dict()
    if args.bootstrap:
        lo, hi = metrics.bootstrap_r_mean([a.title for a in arts], hyps, args.bootstrap, args.seed)
        out["r_mean_ci95"] = [lo, hi]
    table = metrics.render_table([(args.name, out)])
    if args.out:
        _write_json(out, args.out)
        Path(str(args.out) + ".txt").write_text(table + "\n", encoding="utf-8")
    print(table)
    return {"r_mean": report.r_mean, "bleu": report.bleu.bleu}


def cmd_novelty(args):
    arts = _select(read_articles(args.input), args)
    sources = [a.text for a in arts]
    systems = [("reference", [a.title for a in arts])]
    for path in args.hyps or ():
        hyps = baseline.read_predictions(path)
        if len(hyps) != len(arts):
            raise MetricsError(f"{path}: {len(hyps)} predictions for {len(arts)} articles")
        systems.append((Path(path).stem, hyps))
    lines = ["system,n,novelty"]
    for name, heads in systems:
        for n, v in metrics.novelty_profile(sources, heads).items():
            lines.append(f"{name},{n},{v!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return {"systems": [s for s, _ in systems]}


def cmd_corrupt(args):
    arts = read_articles(args.input)
    out = []
    for i, a in enumerate(arts):
        text = normalize(a.text)
        sents = [list(word_tokenize(s)) for s in corpus.sentences(text)]
        spec = mechanisms.NoiseSpec(args.kind, span_length_mean=args.span_mean, mask_fraction=args.mask_fraction,
                                    seed=args.seed + i)
        out.append(corpus.Article(a.id, a.title, " ".join(mechanisms.corrupt(sents, spec)), a.source_tag))
    write_articles(out, args.out)
    print(f"{len(out)} documents corrupted ({args.kind})")
    return {"n_documents": len(out)}


def _pgn_config(args, vocab_size: int) -> pgn.PgnConfig:
    return pgn.PgnConfig(vocab_size=vocab_size, embed_dim=args.embed_dim, hidden_dim=args.hidden_dim,
                         max_src_len=args.max_src_len, max_tgt_len=args.max_tgt_len,
                         coverage_weight=args.coverage_weight, cell=args.cell, seed=args.seed)


def cmd_train_pgn(args):
    if args.synthetic_copy:
        vocab_tokens = None
        cfg = _pgn_config(args, args.vocab_size)
        train_ex = pgn_train.copy_task(args.synthetic_copy, cfg.vocab_size, seed=args.seed)
        val_ex = pgn_train.copy_task(max(1, args.synthetic_copy // 10), cfg.vocab_size, seed=args.seed + 10_000)
    else:
        if not args.train:
            raise UsageError("train-pgn needs --train or --synthetic-copy")
        arts = read_articles(args.train)
        pairs = [(_tokens(a.text)[:args.max_src_len], _tokens(a.title)) for a in arts]
        vocab = Vocab.build((s + t for s, t in pairs), max_size=args.vocab_size)
        vocab_tokens = vocab.token_of
        cfg = _pgn_config(args, len(vocab))
        train_ex = [pgn.extend_ids(s, t, vocab) for s, t in pairs]
        val_ex = None
        if args.val:
            val_ex = [pgn.extend_ids(_tokens(a.text)[:args.max_src_len], _tokens(a.title), vocab)
                      for a in read_articles(args.val)]
    params, curve = pgn_train.train(cfg, train_ex, args.steps, args.batch_size, args.grad_accum, val_ex,
                                    args.eval_every, args.lr, args.clip_norm, args.coverage_start)
    pgn_train.save_checkpoint(params, args.out, vocab_tokens)
    if args.curve:
        pgn_train.write_curve(curve, args.curve)
    result = {"final_train_loss": curve[-1].train_loss if curve else None}
    if val_ex:
        result["val_teacher_forced_accuracy"] = pgn_train.accuracy(params, val_ex)
    print(json.dumps(result))
    return result


def cmd_decode(args):
    params, vocab_tokens = pgn_train.load_checkpoint(args.checkpoint)
    if vocab_tokens is None:
        raise pgn.PgnError(f"{args.checkpoint} carries no vocabulary; cannot decode text")
    vocab = Vocab(vocab_tokens)
    arts = _select(read_articles(args.input), args)
    lines = []
    for a in arts:
        toks = pgn_beam.generate(params, vocab, _tokens(a.text), args.beam, args.max_len, args.alpha)
        lines.append(" ".join(toks))
    baseline.write_predictions(lines, args.out)
    print(f"{len(lines)} headlines written to {args.out}")
    return {"n_predictions": len(lines)}


def cmd_grad_check(args):
    cfg = pgn.PgnConfig(vocab_size=args.vocab_size, embed_dim=args.embed_dim, hidden_dim=args.hidden_dim,
                        cell=args.cell, seed=args.seed, coverage_weight=args.lam, init_scale=args.init_scale)
    params = pgn.init_params(cfg)
    examples = pgn_train.copy_task(2, cfg.vocab_size, min_len=4, max_len=6, seed=args.seed)
    res = gradcheck.grad_check_details(params, examples, args.eps, args.lam, args.max_coords, args.seed)
    out = {"max_rel_error": res.max_rel_error, "checked": res.n_checked, "skipped": res.n_skipped,
           "worst": None if res.worst is None else [res.worst[0], list(res.worst[1])]}
    print(json.dumps(out))
    return out


def cmd_humeval_export(args):
    arts = _select(read_articles(args.articles), args)
    hyps = baseline.read_predictions(args.hyps)
    humaneval.export_tasks(arts, hyps, args.seed, args.tasks, args.key)
    print(f"{len(arts)} tasks written to {args.tasks}")
    return {"n_items": len(arts)}


def cmd_humeval_aggregate(args):
    votes = humaneval.read_votes(args.votes)
    summary = humaneval.aggregate(votes, args.quorum, args.supermajority, args.rule)
    text = summary.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(f"items {summary.n_items}: model {summary.model_win_rate:.3f} draw {summary.draw_rate:.3f} "
          f"human {summary.human_win_rate:.3f}; >= {args.supermajority} votes: model "
          f"{summary.model_supermajority_rate:.3f} human {summary.human_supermajority_rate:.3f}")
    if summary.excluded:
        print(f"excluded {len(summary.excluded)} items without exactly {args.quorum} votes", file=sys.stderr)
    return {"n_items": summary.n_items}


def cmd_report(args):
    names = args.names or [Path(p).stem for p in args.inputs]
    if len(names) != len(args.inputs):
        raise UsageError("--names must match --inputs one to one")
    rows = [(name, json.loads(Path(p).read_text(encoding="utf-8"))) for name, p in zip(names, args.inputs)]
    table = metrics.render_table(rows)
    if args.out:
        Path(args.out).write_text(table + "\n", encoding="utf-8")
    print(table)
    return {"n_systems": len(rows)}


def _add_selection(p):
    p.add_argument("--manifest", help="split manifest JSON; restricts articles to --partition")
    p.add_argument("--partition", default="test", choices=corpus.PARTITIONS)


def _add_global(p, default=None):
    p.add_argument("--config", default=default, help="key=value file overriding defaults")
    p.add_argument("--run-manifest", default=default, help="where to write the run manifest JSON (default: stderr)")
    p.add_argument("-v", "--verbose", action="store_true", default=False if default is None else default)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="headline-bench", description=__doc__.splitlines()[0])
    _add_global(parser)
    # global options are also accepted after the subcommand; SUPPRESS keeps the top-level value otherwise
    common = argparse.ArgumentParser(add_help=False)
    _add_global(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    inputs: dict[str, tuple[str, ...]] = {}

    def add(name, func, inp, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=func)
        inputs[name] = inp
        return p

    p = add("ingest", cmd_ingest, ("input",), "convert a raw corpus to articles JSONL")
    p.add_argument("--format", required=True, choices=("ria", "lenta"))
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = add("split", cmd_split, ("input",), "seeded train/val/test split")
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--ratios", default="90:5:5")
    p.add_argument("--out", required=True)
    p.add_argument("--parts-dir")

    p = add("train-bpe", cmd_train_bpe, ("input",), "learn BPE merges")
    p.add_argument("--input", required=True)
    p.add_argument("--num-merges", type=int, default=30000)
    p.add_argument("--field", choices=("text", "title", "both"), default="both")
    p.add_argument("--out", required=True)

    p = add("baseline", cmd_baseline, ("input", "manifest"), "run a training-free headline generator")
    p.add_argument("--input", required=True)
    _add_selection(p)
    p.add_argument("--generator", default="first_sentence", choices=sorted(baseline.GENERATORS))
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--out", required=True)

    p = add("evaluate", cmd_evaluate, ("refs", "hyps", "manifest"), "score predictions against references")
    p.add_argument("--refs", required=True, help="articles JSONL (titles are references)")
    p.add_argument("--hyps", required=True, help="predictions, one per line")
    _add_selection(p)
    p.add_argument("--no-sources", action="store_true", help="skip novelty")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--smooth-bleu", action="store_true")
    p.add_argument("--bootstrap", type=int, default=0, help="bootstrap samples for an R-mean interval")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="system")
    p.add_argument("--out")

    p = add("novelty", cmd_novelty, ("input", "hyps", "manifest"), "novel n-gram profile as CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--hyps", nargs="*")
    _add_selection(p)
    p.add_argument("--out")

    p = add("corrupt", cmd_corrupt, ("input",), "apply document noising")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", required=True, choices=mechanisms.NOISE_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--span-mean", type=float, default=3.0)
    p.add_argument("--mask-fraction", type=float, default=0.3)
    p.add_argument("--out", required=True)

    p = add("train-pgn", cmd_train_pgn, ("train", "val"), "train the pointer-generator")
    p.add_argument("--train")
    p.add_argument("--val")
    p.add_argument("--synthetic-copy", type=int, default=0, metavar="N", help="train on N copy-first-3 examples")
    p.add_argument("--vocab-size", type=int, default=50)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--hidden-dim", type=int, default=32)
    p.add_argument("--max-src-len", type=int, default=400)
    p.add_argument("--max-tgt-len", type=int, default=30)
    p.add_argument("--coverage-weight", type=float, default=1.0)
    p.add_argument("--coverage-start", type=int, default=0)
    p.add_argument("--cell", choices=("lstm", "gru"), default="lstm")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--grad-accum", type=int, default=1)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--clip-norm", type=float, default=5.0)
    p.add_argument("--eval-every", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--curve", help="CSV loss curve (step,train_loss,val_loss)")

    p = add("decode", cmd_decode, ("checkpoint", "input", "manifest"), "beam-search headlines")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    _add_selection(p)
    p.add_argument("--beam", type=int, default=4)
    p.add_argument("--max-len", type=int)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = add("grad-check", cmd_grad_check, (), "finite-difference gradient check")
    p.add_argument("--vocab-size", type=int, default=12)
    p.add_argument("--embed-dim", type=int, default=4)
    p.add_argument("--hidden-dim", type=int, default=3)
    p.add_argument("--cell", choices=("lstm", "gru"), default="lstm")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--max-coords", type=int)
    p.add_argument("--init-scale", type=float, default=1.0,
                   help="weight range; near-zero gradients at small scales drown in rounding error")
    p.add_argument("--seed", type=int, default=0)

    p = add("humeval-export", cmd_humeval_export, ("articles", "hyps", "manifest"), "write blinded comparison tasks")
    p.add_argument("--articles", required=True)
    p.add_argument("--hyps", required=True)
    _add_selection(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tasks", required=True)
    p.add_argument("--key", required=True)

    p = add("humeval-aggregate", cmd_humeval_aggregate, ("votes",), "aggregate annotator votes")
    p.add_argument("--votes", required=True)
    p.add_argument("--quorum", type=int, default=9)
    p.add_argument("--supermajority", type=int, default=5)
    p.add_argument("--rule", choices=humaneval.RULES, default="plurality")
    p.add_argument("--out")

    p = add("report", cmd_report, ("inputs",), "side-by-side table of report JSONs")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--names", nargs="+")
    p.add_argument("--out")

    parser.set_defaults(_inputs=inputs, _subparsers=sub)
    return parser


def read_config(path: str | Path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    sub = parser.get_default("_subparsers")
    for sp in sub.choices.values():
        overrides = {}
        for action in sp._actions:
            if action.dest in values:
                v = values[action.dest]
                if isinstance(action, argparse._StoreTrueAction):
                    v = v.lower() in ("1", "true", "yes", "on")
                elif action.nargs in ("+", "*"):
                    v = [action.type(x) if action.type else x for x in v.split()]
                elif action.type is not None:
                    v = action.type(v)
                overrides[action.dest] = v
                action.required = False
        sp.set_defaults(**overrides)


def _jsonable(v):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return str(v)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    config = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if not k.startswith("_") and k != "func"}
    try:
        result = args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    digests = {}
    for name in args._inputs[args.command]:
        val = getattr(args, name, None)
        for path in (val if isinstance(val, list) else [val]):
            if path:
                digests[str(path)] = _digest(path)
    manifest = {
        "command": args.command,
        "config": config,
        "seeds": {k: v for k, v in config.items() if k == "seed"},
        "inputs": digests,
        "result": _jsonable(result) if not isinstance(result, dict) else {k: _jsonable(v) for k, v in result.items()},
    }
    text = json.dumps(manifest, ensure_ascii=False, sort_keys=True)
    if args.run_manifest:
        Path(args.run_manifest).write_text(text + "\n", encoding="utf-8")
    else:
        print(text, file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
