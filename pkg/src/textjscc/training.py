"""End-to-end training loop with scheduled sampling.

All randomness in epoch e flows from a stream derived from (seed, e), so a
run resumed from a checkpoint continues bit-identically to the unbroken run
(provided the checkpoint carried the optimizer moments).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelConfig, erase
from .corpus import BatchPlan, EOS_ID, TokenizedSentence
from .errors import NumericalError
from .metrics import wer
from .model import JsccModel
from .optim import AdamState, adam_step, global_grad_norm


def tf_schedule(epoch: int, start_epochs: int = 5, decay_epochs: int = 10,
                tf_min: float = 0.5) -> float:
    """Teacher-forcing probability: 1.0 for the first start_epochs, linear
    decay to tf_min over decay_epochs, then constant."""
    if epoch <= start_epochs:
        return 1.0
    if epoch <= start_epochs + decay_epochs:
        return 1.0 - (1.0 - tf_min) * (epoch - start_epochs) / decay_epochs
    return tf_min


@dataclass
class TrainSettings:
    lr: float = 1e-3
    clip: float = 5.0
    erasure_prob: float = 0.0
    tf_start_epochs: int = 5
    tf_decay_epochs: int = 10
    tf_min: float = 0.5
    wer_sample: int = 32
    seed: int = 0


@dataclass
class EpochLog:
    epoch: int
    mean_loss: float
    train_wer: float
    tf_prob: float


class Trainer:
    """Owns the optimizer state and the epoch counter."""

    def __init__(self, model: JsccModel, settings: TrainSettings,
                 adam: AdamState | None = None, start_epoch: int = 0):
        self.model = model
        self.settings = settings
        self.adam = adam if adam is not None else AdamState(
            model.parameters(), lr=settings.lr, clip=settings.clip)
        self.epoch = start_epoch

    def _epoch_rng(self, epoch: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.settings.seed, spawn_key=(epoch,)))

    def _step(self, ids: np.ndarray, targets: np.ndarray, tf_prob: float,
              rng: np.random.Generator, epoch: int, batch_idx: int) -> float:
        model = self.model
        bits, enc_cache = model.encode_training(ids, rng)
        cfg = ChannelConfig(p_d=self.settings.erasure_prob, seed=0)
        obs = erase(bits, cfg, rng)
        loss, _, dec_cache = model.decode_teacher_forced(obs, targets, tf_prob, rng)
        if not math.isfinite(loss):
            raise NumericalError(
                f"non-finite loss {loss} at epoch {epoch}, batch {batch_idx}, "
                f"grad norm {global_grad_norm(model.parameters()):.3e}")
        d_obs = model.decode_backward(dec_cache)
        # erased bits had no effect on the loss; survivors pass the gradient
        survive = (obs != 0).astype(d_obs.dtype)
        model.encode_backward(enc_cache, d_obs * survive)
        adam_step(model.parameters(), self.adam)
        return loss

    def estimate_train_wer(self, sentences: list[TokenizedSentence], plan: BatchPlan,
                           rng: np.random.Generator, sample: int | None = None) -> float:
        """Greedy-decode a deterministic sample through the channel."""
        budget = self.settings.wer_sample if sample is None else sample
        wers: list[float] = []
        cfg = ChannelConfig(p_d=self.settings.erasure_prob, seed=0)
        for batch in plan.batches:
            if budget <= 0:
                break
            take = batch[:budget]
            budget -= len(take)
            ids = np.array([sentences[i].ids for i in take], dtype=np.int64)
            bits = self.model.encode_batch(ids, "deterministic")
            obs = erase(bits, cfg, rng)
            decoded = self.model.greedy_decode_batch(obs)
            for row, i in zip(decoded, take):
                wers.append(wer(sentences[i].ids, row))
        return sum(wers) / len(wers) if wers else float("nan")

    def run(self, sentences: list[TokenizedSentence], plan: BatchPlan, epochs: int,
            on_epoch=None) -> list[EpochLog]:
        """Train for `epochs` further epochs; returns one log row per epoch."""
        logs: list[EpochLog] = []
        s = self.settings
        for _ in range(epochs):
            self.epoch += 1
            rng = self._epoch_rng(self.epoch)
            tf_prob = tf_schedule(self.epoch, s.tf_start_epochs, s.tf_decay_epochs, s.tf_min)
            losses = []
            for batch_idx, batch in enumerate(plan.batches):
                ids = np.array([sentences[i].ids for i in batch], dtype=np.int64)
                targets = np.concatenate(
                    [ids, np.full((ids.shape[0], 1), EOS_ID, dtype=np.int64)], axis=1)
                losses.append(self._step(ids, targets, tf_prob, rng, self.epoch, batch_idx))
            train_wer = self.estimate_train_wer(sentences, plan, rng)
            log = EpochLog(self.epoch, sum(losses) / len(losses), train_wer, tf_prob)
            logs.append(log)
            if on_epoch is not None:
                on_epoch(log)
        return logs


def train(model: JsccModel, sentences: list[TokenizedSentence], plan: BatchPlan,
          epochs: int, settings: TrainSettings | None = None) -> list[EpochLog]:
    """One-shot convenience wrapper around Trainer."""
    trainer = Trainer(model, settings or TrainSettings())
    return trainer.run(sentences, plan, epochs)
