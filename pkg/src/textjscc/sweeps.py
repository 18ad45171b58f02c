"""Experiment sweeps: WER versus bit budget, erasure rate, or sentence length.

Systems under test: the trained deep codec and three separate
source/channel-coding baselines (batched LZSS, character Huffman, fixed
5-bit), all sharing the same erasure channel and per-sentence bit budget.
Results are deterministic functions of (spec, seed): every trial and every
sentence transmission draws from its own derived RNG stream.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .budget import encode_batch_with_budget, encode_with_budget
from .channel import ChannelConfig, erase
from .corpus import TokenizedSentence
from .errors import ConfigError, DecodeFailure, DomainError, IoError
from .fec import plan_budget, transmit_baseline
from .fixed5 import fixed5_decode, fixed5_encode
from .huffman import HuffmanCodebook, huffman_decode, huffman_encode
from .lzss import lz_compress, lz_decompress
from .metrics import wer
from .model import JsccModel

AXES = ("bits_per_sentence", "erasure_rate", "sentence_length")
SYSTEMS = ("deep", "gzip-batch", "huffman", "fixed5")


@dataclass
class SweepSpec:
    axis: str
    values: list
    systems: list[str]
    trials: int
    seed: int
    bits_per_sentence: int = 400
    erasure_rate: float = 0.05
    fec_mode: str = "idealized"
    lz_batch: int = 32
    beam_width: int = 4

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}")
        if not self.values:
            raise ConfigError("axis values must be nonempty")
        if any(b >= a for a, b in zip(self.values[1:], self.values)):
            raise ConfigError("axis values must be strictly increasing")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        unknown = set(self.systems) - set(SYSTEMS)
        if unknown:
            raise ConfigError(f"unknown systems: {sorted(unknown)}")


@dataclass
class SweepResult:
    axis_value: float
    system: str
    mean_wer: float
    stderr: float
    trials: int
    seed: int


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _trial_stats(trial_means: list[float]) -> tuple[float, float]:
    arr = np.asarray(trial_means, dtype=np.float64)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return mean, stderr


def _eval_deep(model: JsccModel, sents: Sequence[TokenizedSentence], p_d: float,
               spec: SweepSpec, axis_idx: int, sys_idx: int) -> list[float]:
    cfg = ChannelConfig(p_d=p_d, seed=0)
    codewords = [model.encode(s.ids, "deterministic") for s in sents]
    trial_means = []
    for trial in range(spec.trials):
        wers = []
        for si, (sent, cw) in enumerate(zip(sents, codewords)):
            rng = _rng(spec.seed, axis_idx, sys_idx, trial, si)
            obs = erase(cw, cfg, rng)
            hyp = model.beam_search_decode(obs, spec.beam_width)
            wers.append(wer(sent.ids, hyp))
        trial_means.append(sum(wers) / len(wers))
    return trial_means


def _eval_per_sentence_codec(system: str, codebook: HuffmanCodebook | None,
                             sents: Sequence[TokenizedSentence], bits: int, p_d: float,
                             spec: SweepSpec, axis_idx: int, sys_idx: int) -> list[float]:
    plan = plan_budget(bits, p_d, spec.fec_mode)
    if system == "huffman":
        if codebook is None:
            raise ConfigError("huffman baseline needs a codebook")
        encode = lambda text: huffman_encode(text, codebook)
        decode = lambda b: huffman_decode(b, codebook)
    else:
        encode, decode = fixed5_encode, fixed5_decode
    encoded = [encode_with_budget(s.words(), encode, plan.source_bits) for s in sents]
    cfg = ChannelConfig(p_d=p_d, seed=0)
    trial_means = []
    for trial in range(spec.trials):
        wers = []
        for si, (sent, be) in enumerate(zip(sents, encoded)):
            ref = sent.words()
            if not be.fits:
                wers.append(wer(ref, []))
                continue
            rng = _rng(spec.seed, axis_idx, sys_idx, trial, si)
            try:
                out_bits = transmit_baseline(be.bits, plan, cfg, rng)
                hyp = decode(out_bits).split()
            except DecodeFailure:
                hyp = []
            wers.append(wer(ref, hyp))
        trial_means.append(sum(wers) / len(wers))
    return trial_means


def _eval_lz_batch(sents: Sequence[TokenizedSentence], bits: int, p_d: float,
                   spec: SweepSpec, axis_idx: int, sys_idx: int) -> list[float]:
    plan = plan_budget(bits, p_d, spec.fec_mode)
    batches = [list(range(i, min(i + spec.lz_batch, len(sents))))
               for i in range(0, len(sents), spec.lz_batch)]
    encoded = []
    for members in batches:
        words = [sents[i].words() for i in members]
        encoded.append(encode_batch_with_budget(words, plan.source_bits))
    trial_means = []
    for trial in range(spec.trials):
        wers = []
        for bi, (members, bbe) in enumerate(zip(batches, encoded)):
            refs = [sents[i].words() for i in members]
            if not bbe.fits:
                wers.extend(wer(ref, []) for ref in refs)
                continue
            # the batch stream is one transmission under a batch-sized plan
            batch_plan = plan_budget(bits * len(members), p_d, spec.fec_mode)
            cfg = ChannelConfig(p_d=p_d, seed=0)
            rng = _rng(spec.seed, axis_idx, sys_idx, trial, bi)
            try:
                out_bits = transmit_baseline(bbe.bits, batch_plan, cfg, rng)
                texts = lz_decompress(out_bits)
                hyps = [t.split() for t in texts]
            except DecodeFailure:
                hyps = [[] for _ in refs]
            if len(hyps) != len(refs):
                hyps = [[] for _ in refs]  # corrupted frame: score everything errored
            wers.extend(wer(ref, hyp) for ref, hyp in zip(refs, hyps))
        trial_means.append(sum(wers) / len(wers))
    return trial_means


def run_sweep(spec: SweepSpec, sentences: Sequence[TokenizedSentence],
              models: dict[int, JsccModel] | None = None,
              codebook: HuffmanCodebook | None = None,
              jobs: int = 1) -> list[SweepResult]:
    """Transmit the test set at every axis value for every system.

    For the deep system, `models` maps each bit budget to a trained model;
    a missing budget raises ConfigError.  jobs > 1 evaluates the
    (axis value, system) cells in a thread pool; per-cell RNG streams are
    derived from (seed, axis index, system index, trial, transmission), so
    the output is identical to the sequential run.
    """
    if not sentences:
        raise ConfigError("sweep needs a nonempty test set")

    cells = []
    for axis_idx, value in enumerate(spec.values):
        bits = spec.bits_per_sentence
        p_d = spec.erasure_rate
        sents = list(sentences)
        if spec.axis == "bits_per_sentence":
            bits = int(value)
        elif spec.axis == "erasure_rate":
            p_d = float(value)
        else:
            sents = [s for s in sentences if len(s) == int(value)]
            if not sents:
                raise ConfigError(f"no test sentences of length {value}")
        for sys_idx, system in enumerate(spec.systems):
            if system == "deep" and (models is None or bits not in models):
                raise ConfigError(f"no trained checkpoint for bit budget {bits}")
            cells.append((axis_idx, value, sys_idx, system, bits, p_d, sents))

    def evaluate(cell) -> SweepResult:
        axis_idx, value, sys_idx, system, bits, p_d, sents = cell
        if system == "deep":
            trial_means = _eval_deep(models[bits], sents, p_d, spec, axis_idx, sys_idx)
        elif system == "gzip-batch":
            trial_means = _eval_lz_batch(sents, bits, p_d, spec, axis_idx, sys_idx)
        else:
            trial_means = _eval_per_sentence_codec(
                system, codebook, sents, bits, p_d, spec, axis_idx, sys_idx)
        mean, stderr = _trial_stats(trial_means)
        return SweepResult(float(value), system, mean, stderr, spec.trials, spec.seed)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(evaluate, cells))
    return [evaluate(cell) for cell in cells]


COLUMNS = ("axis_value", "system", "mean_wer", "stderr", "trials", "seed")


def emit_results(table: list[SweepResult], path: str, format: str = "csv") -> None:
    """Write the results table with a stable column order (atomic rename)."""
    tmp = path + ".tmp"
    try:
        if format == "csv":
            with open(tmp, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(COLUMNS)
                for row in table:
                    writer.writerow([repr(row.axis_value), row.system, repr(row.mean_wer),
                                     repr(row.stderr), row.trials, row.seed])
        elif format == "json":
            rows = [{"axis_value": r.axis_value, "system": r.system,
                     "mean_wer": r.mean_wer, "stderr": r.stderr,
                     "trials": r.trials, "seed": r.seed} for r in table]
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(rows, fh, indent=2)
                fh.write("\n")
        else:
            raise DomainError(f"unknown results format {format!r}")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write results to {path}: {exc}") from exc


def load_results(path: str, format: str = "csv") -> list[SweepResult]:
    """Inverse of emit_results."""
    try:
        if format == "csv":
            with open(path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                header = next(reader)
                if tuple(header) != COLUMNS:
                    raise IoError(f"unexpected results header in {path}")
                return [SweepResult(float(r[0]), r[1], float(r[2]), float(r[3]),
                                    int(r[4]), int(r[5])) for r in reader]
        with open(path, encoding="utf-8") as fh:
            rows = json.load(fh)
        return [SweepResult(float(r["axis_value"]), r["system"], float(r["mean_wer"]),
                            float(r["stderr"]), int(r["trials"]), int(r["seed"]))
                for r in rows]
    except OSError as exc:
        raise IoError(f"cannot read results from {path}: {exc}") from exc
