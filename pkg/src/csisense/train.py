"""Epoch loop: seeded per-epoch shuffle, sequential mini-batches (final
partial batch included), joint loss, Adam updates, and per-epoch learning
curves measured with batch norm in eval mode on both splits."""

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError
from .losses import joint_loss_and_grads
from .optim import Adam, lr_schedule
from .seeds import derive_seed

CURVE_HEADER = (
    "epoch,train_loss,test_loss,act_train_acc,act_test_acc,loc_train_acc,loc_test_acc"
)


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 128
    lr0: float = 0.005
    decay: float = 0.5
    decay_every: int = 10
    lam: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr0 <= 0:
            raise ConfigError(f"lr0 must be > 0, got {self.lr0}")
        if self.decay_every < 1:
            raise ConfigError(f"decay_every must be >= 1, got {self.decay_every}")

    def as_dict(self):
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lr0": self.lr0,
            "decay": self.decay,
            "decay_every": self.decay_every,
            "lambda": self.lam,
            "seed": self.seed,
        }


CONFIG_KEYS = ("epochs", "batch_size", "lr0", "decay", "decay_every", "lambda", "seed")


def read_train_config(path):
    """Key=value config file with the TrainConfig keys; unknown keys rejected."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or key not in CONFIG_KEYS:
                raise ConfigError(f"bad config line: {line!r}")
            values[key] = value.strip()
    kwargs = {}
    for key, value in values.items():
        name = "lam" if key == "lambda" else key
        caster = float if name in ("lr0", "decay", "lam") else int
        try:
            kwargs[name] = caster(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return TrainConfig(**kwargs)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    test_loss: float
    act_train_acc: float
    act_test_acc: float
    loc_train_acc: float
    loc_test_acc: float
    # Per-task loss parts, kept alongside the totals.
    act_train_loss: float = 0.0
    loc_train_loss: float = 0.0
    act_test_loss: float = 0.0
    loc_test_loss: float = 0.0


@dataclass
class LearningCurve:
    records: list = field(default_factory=list)

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CURVE_HEADER + "\n")
            for r in self.records:
                fields = (
                    r.train_loss,
                    r.test_loss,
                    r.act_train_acc,
                    r.act_test_acc,
                    r.loc_train_acc,
                    r.loc_test_acc,
                )
                fh.write(str(r.epoch) + "," + ",".join(repr(float(v)) for v in fields) + "\n")


@dataclass
class SplitData:
    """One split as dense arrays ready for batching."""

    x: np.ndarray  # [N, 52, 192] float32
    act: np.ndarray  # [N] int
    loc: np.ndarray  # [N] int

    def __len__(self):
        return self.x.shape[0]


def evaluate_split(net, data: SplitData, lam=1.0, batch_size=256):
    """Loss and accuracies over a split with batch norm in eval mode."""
    n = len(data)
    if n == 0:
        raise ConfigError("cannot evaluate an empty split")
    total = act_part = loc_part = 0.0
    act_hits = loc_hits = 0
    for start in range(0, n, batch_size):
        stop = min(start + batch_size, n)
        xb = data.x[start:stop]
        act_scores, loc_scores = net.forward(xb, training=False)
        value, _, _ = joint_loss_and_grads(
            act_scores, loc_scores, data.act[start:stop], data.loc[start:stop], lam
        )
        weight = stop - start
        total += value.total * weight
        act_part += value.activity_part * weight
        loc_part += value.location_part * weight
        act_hits += int((act_scores.argmax(axis=1) == data.act[start:stop]).sum())
        loc_hits += int((loc_scores.argmax(axis=1) == data.loc[start:stop]).sum())
    return {
        "loss": total / n,
        "act_loss": act_part / n,
        "loc_loss": loc_part / n,
        "act_acc": act_hits / n,
        "loc_acc": loc_hits / n,
    }


def predict_split(net, data: SplitData, batch_size=256):
    """Arg-max predictions for both heads, eval mode."""
    act_preds, loc_preds = [], []
    for start in range(0, len(data), batch_size):
        xb = data.x[start : start + batch_size]
        act_scores, loc_scores = net.forward(xb, training=False)
        act_preds.append(act_scores.argmax(axis=1))
        loc_preds.append(loc_scores.argmax(axis=1))
    return np.concatenate(act_preds), np.concatenate(loc_preds)


def train(net, train_data: SplitData, test_data: SplitData, config: TrainConfig,
          on_epoch=None):
    """Train in place; returns the LearningCurve.

    A non-finite loss or gradient aborts the run: parameters and batch-norm
    state are rolled back to the last finished epoch before the error is
    re-raised (with the partial curve attached as `.curve`).
    """
    n = len(train_data)
    if n == 0:
        raise ConfigError("training set is empty")
    shuffle_rng = np.random.default_rng(derive_seed(config.seed, "shuffle"))
    adam = Adam(net.params())
    curve = LearningCurve()
    snapshot = copy.deepcopy(net.state_dict())
    try:
        for epoch in range(config.epochs):
            lr = lr_schedule(epoch, config.lr0, config.decay, config.decay_every)
            perm = shuffle_rng.permutation(n)
            for start in range(0, n, config.batch_size):
                idx = perm[start : start + config.batch_size]
                act_scores, loc_scores = net.forward(train_data.x[idx], training=True)
                _, dact, dloc = joint_loss_and_grads(
                    act_scores, loc_scores, train_data.act[idx], train_data.loc[idx],
                    config.lam,
                )
                net.backward(dact, dloc)
                adam.step(lr)
            tr = evaluate_split(net, train_data, config.lam)
            te = evaluate_split(net, test_data, config.lam)
            record = EpochRecord(
                epoch=epoch,
                train_loss=tr["loss"],
                test_loss=te["loss"],
                act_train_acc=tr["act_acc"],
                act_test_acc=te["act_acc"],
                loc_train_acc=tr["loc_acc"],
                loc_test_acc=te["loc_acc"],
                act_train_loss=tr["act_loss"],
                loc_train_loss=tr["loc_loss"],
                act_test_loss=te["act_loss"],
                loc_test_loss=te["loc_loss"],
            )
            curve.records.append(record)
            snapshot = copy.deepcopy(net.state_dict())
            if on_epoch is not None:
                on_epoch(record)
    except NumericError as exc:
        net.load_state_dict(snapshot)
        exc.curve = curve
        raise
    return curve
