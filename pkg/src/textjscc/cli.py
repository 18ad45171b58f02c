"""Command line entry point.

Subcommands: prepare, train, transmit, sweep, embed, gradcheck.  Every
command validates its configuration before touching the filesystem, all
output files are written atomically, and all randomness flows from the
single config seed.

Exit codes: 0 success, 2 config/validation error, 3 runtime error.
Set TEXTJSCC_LOG to error, info, or debug to control verbosity.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np

from . import corpus as corpus_mod
from .analysis import classical_mds, hamming_matrix
from .budget import encode_batch_with_budget, encode_with_budget
from .channel import erase
from .checkpoint import load_model, restore_adam, save_checkpoint
from .config import RunConfig, load_config
from .corpus import (
    CharFrequencyTable,
    Vocabulary,
    batch_by_length,
    build_vocabulary,
    char_frequencies,
    detokenize,
    filter_sentences,
    tokenize,
)
from .errors import ConfigError, IoError, TextJsccError
from .fec import plan_budget, transmit_baseline
from .fixed5 import fixed5_decode, fixed5_encode
from .gradcheck import run_verification_suite
from .huffman import codebook_for_pipeline, huffman_decode, huffman_encode
from .lzss import lz_compress, lz_decompress
from .metrics import wer
from .model import JsccModel, load_pretrained_embeddings
from .sweeps import run_sweep, emit_results
from .training import Trainer

log = logging.getLogger("textjscc")

GRADCHECK_TOL = 1e-4


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(os.environ.get("TEXTJSCC_LOG", "info"), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")


def _require_file(path: str | None, what: str) -> str:
    if path is None:
        raise ConfigError(f"{what} is not configured")
    if not os.path.exists(path):
        raise IoError(f"{what} {path} does not exist")
    return path


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg["out"], exist_ok=True)
    return os.path.join(cfg["out"], name)


def cmd_prepare(cfg: RunConfig, args) -> int:
    train_path = _require_file(cfg["corpus.train"], "corpus.train")
    lines = corpus_mod.read_lines(train_path)
    vocab = build_vocabulary(lines, cfg["corpus.vocab_size"])
    kept = filter_sentences(lines, vocab, cfg["corpus.min_len"],
                            cfg["corpus.max_len"], cfg["corpus.max_unk_frac"])
    freqs = char_frequencies(lines)

    vocab.save(_out_path(cfg, "vocab.txt"))
    corpus_mod.write_lines(_out_path(cfg, "train_filtered.txt"), (s.raw for s in kept))
    freqs.save(_out_path(cfg, "charfreq.tsv"))
    print(f"vocabulary: {len(vocab)} tokens")
    print(f"train sentences kept: {len(kept)} of {len(lines)}")
    if cfg["corpus.test"]:
        test_lines = corpus_mod.read_lines(_require_file(cfg["corpus.test"], "corpus.test"))
        test_kept = filter_sentences(test_lines, vocab, cfg["corpus.min_len"],
                                     cfg["corpus.max_len"], cfg["corpus.max_unk_frac"])
        corpus_mod.write_lines(_out_path(cfg, "test_filtered.txt"),
                               (s.raw for s in test_kept))
        print(f"test sentences kept: {len(test_kept)} of {len(test_lines)}")
    print(f"character alphabet: {len(freqs.counts)} symbols, {freqs.total} chars")
    return 0


def _load_prepared(cfg: RunConfig):
    vocab = Vocabulary.load(_require_file(_out_path(cfg, "vocab.txt"), "vocabulary"))
    lines = corpus_mod.read_lines(
        _require_file(_out_path(cfg, "train_filtered.txt"), "filtered corpus"))
    sentences = [tokenize(line, vocab) for line in lines]
    return vocab, sentences


def _write_trainlog(path: str, rows: list) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "train_wer", "tf_prob"])
        for row in rows:
            writer.writerow([row.epoch, repr(row.mean_loss), repr(row.train_wer),
                             repr(row.tf_prob)])
    os.replace(tmp, path)


def cmd_train(cfg: RunConfig, args) -> int:
    vocab, sentences = _load_prepared(cfg)
    plan = batch_by_length(sentences, cfg["train.batch_size"])
    settings = cfg.train_settings()

    if args.resume:
        model, extra = load_model(_require_file(args.resume, "checkpoint"))
        adam = restore_adam(model, extra, settings.lr, settings.clip)
        trainer = Trainer(model, settings, adam, start_epoch=int(extra.get("epoch", 0)))
        log.info("resumed from %s at epoch %d", args.resume, trainer.epoch)
    else:
        model = JsccModel(cfg.jscc_config(len(vocab)), seed=cfg["seed"])
        if cfg["model.glove"]:
            n = load_pretrained_embeddings(model, vocab,
                                           _require_file(cfg["model.glove"], "embedding file"))
            log.info("loaded %d pretrained embedding rows", n)
        trainer = Trainer(model, settings)

    ckpt_path = _out_path(cfg, "model.tjscc")
    log_path = _out_path(cfg, "trainlog.csv")
    every = max(1, cfg["train.checkpoint_every"])
    rows = []

    def on_epoch(entry):
        rows.append(entry)
        _write_trainlog(log_path, rows)
        if entry.epoch % every == 0:
            save_checkpoint(ckpt_path, model, trainer.adam, {"epoch": entry.epoch})
        log.info("epoch %d loss %.4f wer %.3f tf %.2f",
                 entry.epoch, entry.mean_loss, entry.train_wer, entry.tf_prob)

    trainer.run(sentences, plan, cfg["train.epochs"], on_epoch=on_epoch)
    save_checkpoint(ckpt_path, model, trainer.adam, {"epoch": trainer.epoch})
    _write_trainlog(log_path, rows)
    print(f"checkpoint written to {ckpt_path}")
    if rows:
        print(f"final epoch {rows[-1].epoch}: loss {rows[-1].mean_loss:.4f} "
              f"train WER {rows[-1].train_wer:.3f}")
    return 0


def cmd_transmit(cfg: RunConfig, args) -> int:
    vocab = Vocabulary.load(_require_file(_out_path(cfg, "vocab.txt"), "vocabulary"))
    sent = tokenize(args.sentence, vocab)
    if len(sent) == 0:
        raise ConfigError("input sentence is empty")
    channel_cfg = cfg.channel_config()
    bits = cfg["model.bits"]

    if args.system == "deep":
        ckpt = args.checkpoint or _out_path(cfg, "model.tjscc")
        model, _ = load_model(_require_file(ckpt, "checkpoint"))
        codeword = model.encode(sent.ids, "deterministic")
        obs = erase(codeword, channel_cfg, channel_cfg.stream(0))
        hyp = model.beam_search_decode(obs, cfg["model.beam_width"])
        print(f"codeword bits: {codeword.size}")
        print(f"erasures injected: {int((obs == 0).sum())}")
        print(f"decoded: {detokenize(hyp, vocab)}")
        print(f"wer: {wer(sent.ids, hyp):.4f}")
        return 0

    plan = plan_budget(bits, channel_cfg.p_d, cfg["baseline.fec_mode"])
    words = sent.words()
    if args.system == "huffman":
        freqs = CharFrequencyTable.load(
            _require_file(_out_path(cfg, "charfreq.tsv"), "frequency table"))
        book = codebook_for_pipeline(freqs)
        encode = lambda text: huffman_encode(text, book)
        decode = lambda b: huffman_decode(b, book)
        be = encode_with_budget(words, encode, plan.source_bits)
        payload = be.bits
    elif args.system == "fixed5":
        decode = fixed5_decode
        be = encode_with_budget(words, fixed5_encode, plan.source_bits)
        payload = be.bits
    elif args.system == "gzip-batch":
        bbe = encode_batch_with_budget([words], plan.source_bits)
        be = None
        payload = bbe.bits
        decode = lambda b: lz_decompress(b)[0]
        dropped = bbe.words_dropped[0]
    else:
        raise ConfigError(f"unknown system {args.system!r}")
    if be is not None:
        dropped = be.words_dropped

    out_bits = transmit_baseline(payload, plan, channel_cfg, channel_cfg.stream(0))
    hyp = decode(out_bits).split()
    print(f"payload bits: {payload.size} (source budget {plan.source_bits}, "
          f"parity reserve {plan.parity_bits})")
    print(f"words dropped to fit: {dropped}")
    print(f"decoded: {' '.join(hyp)}")
    print(f"wer: {wer(words, hyp):.4f}")
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    vocab = Vocabulary.load(_require_file(_out_path(cfg, "vocab.txt"), "vocabulary"))
    test_path = _out_path(cfg, "test_filtered.txt")
    if not os.path.exists(test_path):
        test_path = _require_file(_out_path(cfg, "train_filtered.txt"), "filtered corpus")
    sentences = [tokenize(line, vocab) for line in corpus_mod.read_lines(test_path)]

    spec = cfg.sweep_spec()
    models = {}
    for path in cfg["sweep.checkpoints"]:
        model, _ = load_model(_require_file(path, "sweep checkpoint"))
        if model.config.vocab_size != len(vocab):
            raise ConfigError(f"checkpoint {path} was trained with a different vocabulary")
        models[model.config.bits] = model
    codebook = None
    if "huffman" in spec.systems:
        freqs = CharFrequencyTable.load(
            _require_file(_out_path(cfg, "charfreq.tsv"), "frequency table"))
        codebook = codebook_for_pipeline(freqs)

    table = run_sweep(spec, sentences, models=models, codebook=codebook, jobs=args.jobs)
    csv_path = _out_path(cfg, f"sweep_{spec.axis}.csv")
    json_path = _out_path(cfg, f"sweep_{spec.axis}.json")
    emit_results(table, csv_path, "csv")
    emit_results(table, json_path, "json")
    for row in table:
        print(f"{spec.axis}={row.axis_value:g} {row.system}: "
              f"WER {row.mean_wer:.4f} +/- {row.stderr:.4f}")
    print(f"results written to {csv_path} and {json_path}")
    return 0


def cmd_embed(cfg: RunConfig, args) -> int:
    vocab = Vocabulary.load(_require_file(_out_path(cfg, "vocab.txt"), "vocabulary"))
    ckpt = args.checkpoint or _out_path(cfg, "model.tjscc")
    model, _ = load_model(_require_file(ckpt, "checkpoint"))
    lines = corpus_mod.read_lines(_require_file(args.sentences, "sentences file"))
    if not lines:
        raise ConfigError(f"no sentences in {args.sentences}")
    codewords = np.stack([model.encode(tokenize(line, vocab).ids, "deterministic")
                          for line in lines])
    D = hamming_matrix(codewords)

    ham_path = _out_path(cfg, "hamming.csv")
    tmp = ham_path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + lines)
        for label, row in zip(lines, D):
            writer.writerow([label] + [int(v) for v in row])
    os.replace(tmp, ham_path)

    coords = classical_mds(D, dim=2)
    mds_path = _out_path(cfg, "mds.csv")
    tmp = mds_path + ".tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "x", "y"])
        for label, (x, y) in zip(lines, coords):
            writer.writerow([label, repr(float(x)), repr(float(y))])
    os.replace(tmp, mds_path)
    print(f"hamming matrix written to {ham_path}")
    print(f"mds coordinates written to {mds_path}")
    return 0


def cmd_gradcheck(cfg: RunConfig, args) -> int:
    results = run_verification_suite(seed=cfg["seed"])
    ok = True
    for name, err in results.items():
        passed = err < GRADCHECK_TOL
        ok = ok and passed
        print(f"{name}: max relative error {err:.3e} "
              f"{'PASS' if passed else 'FAIL'} (tolerance {GRADCHECK_TOL:g})")
    if not ok:
        raise TextJsccError("gradient check failed")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textjscc",
        description="Joint source-channel coding of text over erasure channels.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="flat-key YAML config file")
        p.add_argument("--seed", type=int, metavar="N", help="override the config seed")
        p.add_argument("--out", metavar="DIR", help="override the output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a single config key (repeatable)")
        p.add_argument("--jobs", type=int, default=1, metavar="N",
                       help="parallel workers for sweep trials")

    p = sub.add_parser("prepare", help="build vocabulary, filtered corpus, char stats")
    common(p)
    p = sub.add_parser("train", help="train the deep codec")
    common(p)
    p.add_argument("--resume", metavar="PATH", help="continue from a checkpoint")
    p = sub.add_parser("transmit", help="send one sentence through a system")
    common(p)
    p.add_argument("--sentence", required=True, help="input sentence text")
    p.add_argument("--system", default="deep",
                   choices=["deep", "gzip-batch", "huffman", "fixed5"])
    p.add_argument("--checkpoint", metavar="PATH", help="deep model checkpoint")
    p = sub.add_parser("sweep", help="run the configured WER sweep")
    common(p)
    p = sub.add_parser("embed", help="hamming + MDS analysis of sentence codewords")
    common(p)
    p.add_argument("--sentences", required=True, metavar="PATH",
                   help="file with one sentence per line")
    p.add_argument("--checkpoint", metavar="PATH", help="deep model checkpoint")
    p = sub.add_parser("gradcheck", help="finite-difference verification suite")
    common(p)
    return parser


_COMMANDS = {
    "prepare": cmd_prepare,
    "train": cmd_train,
    "transmit": cmd_transmit,
    "sweep": cmd_sweep,
    "embed": cmd_embed,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config, args.set, args.seed, args.out)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except TextJsccError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
