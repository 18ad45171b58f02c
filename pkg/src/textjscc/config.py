"""Declarative run configuration: one flat-key YAML document.

Keys are dotted paths (plain strings), values are scalars or arrays, e.g.

    corpus.train: data/train.txt
    model.bits: 400
    sweep.values: [200, 400, 600]

CLI --set key=value overrides take precedence over the file.  Defaults mirror
the reference setup: 200-d embeddings, 2x256 BLSTM encoder, 2x512 LSTM
decoder, batch 128, erasure probability 0.05, 400-bit budget.
"""

from __future__ import annotations

import copy
import os

import yaml

from .channel import ChannelConfig
from .errors import ConfigError
from .model import JsccConfig
from .sweeps import SweepSpec
from .training import TrainSettings

DEFAULTS: dict = {
    "seed": 1234,
    "out": "runs",
    "corpus.train": None,
    "corpus.test": None,
    "corpus.vocab_size": 1000,
    "corpus.min_len": 4,
    "corpus.max_len": 30,
    "corpus.max_unk_frac": 0.2,
    "model.embed_dim": 200,
    "model.encoder_stacks": 2,
    "model.encoder_hidden": 256,
    "model.decoder_stacks": 2,
    "model.decoder_hidden": 512,
    "model.bits": 400,
    "model.beam_width": 4,
    "model.max_decode_len": 32,
    "model.glove": None,
    "train.batch_size": 128,
    "train.epochs": 100,
    "train.lr": 1e-3,
    "train.clip": 5.0,
    "train.tf_start_epochs": 5,
    "train.tf_decay_epochs": 10,
    "train.tf_min": 0.5,
    "train.checkpoint_every": 50,
    "train.wer_sample": 32,
    "train.precision": "f32",
    "channel.erasure_prob": 0.05,
    "baseline.fec_mode": "idealized",
    "baseline.lz_batch": 32,
    "sweep.axis": "bits_per_sentence",
    "sweep.values": [200, 400, 600],
    "sweep.systems": ["gzip-batch", "huffman", "fixed5"],
    "sweep.trials": 3,
    "sweep.checkpoints": [],
}

_INT_KEYS = {
    "seed", "corpus.vocab_size", "corpus.min_len", "corpus.max_len",
    "model.embed_dim", "model.encoder_stacks", "model.encoder_hidden",
    "model.decoder_stacks", "model.decoder_hidden", "model.bits",
    "model.beam_width", "model.max_decode_len", "train.batch_size",
    "train.epochs", "train.checkpoint_every", "train.wer_sample",
    "baseline.lz_batch", "sweep.trials",
}
_FLOAT_KEYS = {
    "corpus.max_unk_frac", "train.lr", "train.clip", "train.tf_min",
    "channel.erasure_prob",
}


class RunConfig:
    """Validated flat-key configuration."""

    def __init__(self, values: dict):
        self.values = values

    def __getitem__(self, key: str):
        return self.values[key]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def validate(self) -> None:
        v = self.values
        for key in v:
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
        for key in _INT_KEYS:
            if not isinstance(v[key], int) or isinstance(v[key], bool):
                raise ConfigError(f"{key} must be an integer, got {v[key]!r}")
        for key in _FLOAT_KEYS:
            if not isinstance(v[key], (int, float)) or isinstance(v[key], bool):
                raise ConfigError(f"{key} must be a number, got {v[key]!r}")
        if v["model.bits"] % 2 != 0 or v["model.bits"] < 2:
            raise ConfigError(f"model.bits must be even and >= 2, got {v['model.bits']}")
        if not 0.0 <= v["channel.erasure_prob"] < 1.0:
            raise ConfigError(
                f"channel.erasure_prob must lie in [0, 1), got {v['channel.erasure_prob']}")
        if v["baseline.fec_mode"] not in ("idealized", "concrete"):
            raise ConfigError(f"unknown baseline.fec_mode {v['baseline.fec_mode']!r}")
        if v["train.precision"] not in ("f32", "f64"):
            raise ConfigError(f"train.precision must be f32 or f64")
        if not isinstance(v["sweep.values"], list) or not v["sweep.values"]:
            raise ConfigError("sweep.values must be a nonempty array")
        if not isinstance(v["sweep.systems"], list):
            raise ConfigError("sweep.systems must be an array")
        if not isinstance(v["sweep.checkpoints"], list):
            raise ConfigError("sweep.checkpoints must be an array of paths")

    # ----- derived objects -----

    def jscc_config(self, vocab_size: int, bits: int | None = None) -> JsccConfig:
        v = self.values
        return JsccConfig(
            vocab_size=vocab_size,
            embed_dim=v["model.embed_dim"],
            encoder_stacks=v["model.encoder_stacks"],
            encoder_hidden=v["model.encoder_hidden"],
            decoder_stacks=v["model.decoder_stacks"],
            decoder_hidden=v["model.decoder_hidden"],
            bits=bits if bits is not None else v["model.bits"],
            beam_width=v["model.beam_width"],
            max_decode_len=v["model.max_decode_len"],
            precision=v["train.precision"],
        )

    def train_settings(self) -> TrainSettings:
        v = self.values
        return TrainSettings(
            lr=v["train.lr"], clip=v["train.clip"],
            erasure_prob=v["channel.erasure_prob"],
            tf_start_epochs=v["train.tf_start_epochs"],
            tf_decay_epochs=v["train.tf_decay_epochs"],
            tf_min=v["train.tf_min"], wer_sample=v["train.wer_sample"],
            seed=v["seed"],
        )

    def channel_config(self) -> ChannelConfig:
        return ChannelConfig(p_d=self.values["channel.erasure_prob"],
                             seed=self.values["seed"])

    def sweep_spec(self) -> SweepSpec:
        v = self.values
        return SweepSpec(
            axis=v["sweep.axis"], values=list(v["sweep.values"]),
            systems=list(v["sweep.systems"]), trials=v["sweep.trials"],
            seed=v["seed"], bits_per_sentence=v["model.bits"],
            erasure_rate=v["channel.erasure_prob"],
            fec_mode=v["baseline.fec_mode"], lz_batch=v["baseline.lz_batch"],
            beam_width=v["model.beam_width"],
        )


def load_config(path: str | None = None, overrides: list[str] | None = None,
                seed: int | None = None, out: str | None = None) -> RunConfig:
    """Merge defaults, the config file, --set overrides, and flag overrides."""
    values = copy.deepcopy(DEFAULTS)
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file {path} does not exist")
        with open(path, encoding="utf-8") as fh:
            try:
                doc = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        if doc is None:
            doc = {}
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must be a flat key mapping")
        for key, val in doc.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            values[key] = val
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r} in --set")
        try:
            values[key] = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse --set value {raw!r}: {exc}") from exc
    if seed is not None:
        values["seed"] = seed
    if out is not None:
        values["out"] = out
    cfg = RunConfig(values)
    cfg.validate()
    return cfg
