"""Offline replay evaluation on logged bandit data.

Logs are CSV files with header ``index,ctx_0,...,ctx_{L-1},action,logging_prob,reward``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence

import numpy as np

from .environments import EnvironmentModel


class LogParseError(ValueError):
    """Raised for a malformed log row; ``row`` is the 1-based line number."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


@dataclass
class LogRecord:
    index: int
    context: np.ndarray
    action: int
    logging_prob: float
    reward: float

    def __eq__(self, other):
        if not isinstance(other, LogRecord):
            return NotImplemented
        return (
            self.index == other.index
            and np.array_equal(self.context, other.context)
            and self.action == other.action
            and self.logging_prob == other.logging_prob
            and self.reward == other.reward
        )


def _fmt(x: float) -> str:
    return np.format_float_positional(float(x), unique=True, trim="-")


def log_header(context_dim: int) -> List[str]:
    return ["index"] + [f"ctx_{i}" for i in range(context_dim)] + ["action", "logging_prob", "reward"]


def write_log(records: Sequence[LogRecord], stream, context_dim: int = None) -> None:
    if context_dim is None:
        context_dim = len(records[0].context) if records else 0
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(log_header(context_dim))
    for rec in records:
        writer.writerow(
            [rec.index]
            + [_fmt(c) for c in rec.context]
            + [rec.action, _fmt(rec.logging_prob), _fmt(rec.reward)]
        )


def serialize_log(records: Sequence[LogRecord], context_dim: int = None) -> str:
    buf = io.StringIO()
    write_log(records, buf, context_dim)
    return buf.getvalue()


def parse_log(rows: Iterable[str]) -> List[LogRecord]:
    """Parse and validate log rows (an open file or any iterable of lines)."""
    reader = csv.reader(rows)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise LogParseError(1, "missing header row") from None
    ctx_cols = [h for h in header if h.startswith("ctx_")]
    expected = log_header(len(ctx_cols))
    if header != expected:
        missing = [c for c in expected if c not in header]
        detail = f"missing columns {missing}" if missing else f"expected columns {expected}"
        raise LogParseError(1, f"bad header: {detail}")
    n_ctx = len(ctx_cols)

    records: List[LogRecord] = []
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise LogParseError(row_no, f"expected {len(header)} fields, got {len(row)}")
        try:
            index = int(row[0])
            context = np.array([float(c) for c in row[1: 1 + n_ctx]])
            action = int(row[1 + n_ctx])
            logging_prob = float(row[2 + n_ctx])
            reward = float(row[3 + n_ctx])
        except ValueError as exc:
            raise LogParseError(row_no, f"malformed number ({exc})") from None
        if not np.all(np.isfinite(context)) or not math.isfinite(reward):
            raise LogParseError(row_no, "non-finite context or reward")
        if not 0.0 < logging_prob < 1.0:
            raise LogParseError(row_no, f"logging_prob {logging_prob} outside (0, 1)")
        if action < 0:
            raise LogParseError(row_no, f"negative action {action}")
        if records and index <= records[-1].index:
            raise LogParseError(row_no, f"index {index} not increasing")
        records.append(LogRecord(index, context, action, logging_prob, reward))
    return records


def read_log(path) -> List[LogRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_log(fh)


@dataclass
class ReplayResult:
    value_estimate: float
    accepted_count: int
    total_count: int
    weight_sum: float
    weights: np.ndarray = field(default=None, repr=False)
    rewards: np.ndarray = field(default=None, repr=False)

    @property
    def degenerate(self) -> bool:
        return self.weight_sum == 0.0

    def bootstrap_se(self, rng: np.random.Generator, n_boot: int = 200) -> float:
        """Bootstrap standard error of the estimate, resampling all records.

        Rejected records contribute zero weight and zero reward.
        """
        w = np.zeros(self.total_count)
        wr = np.zeros(self.total_count)
        w[: self.accepted_count] = self.weights
        wr[: self.accepted_count] = self.weights * self.rewards
        est = np.empty(n_boot)
        for i in range(n_boot):
            idx = rng.integers(0, self.total_count, self.total_count)
            den = w[idx].sum()
            est[i] = wr[idx].sum() / den if den > 0 else np.nan
        return float(np.nanstd(est, ddof=1))


def replay(log: Sequence[LogRecord], policy, rng: np.random.Generator) -> ReplayResult:
    """Replay ``policy`` over ``log`` with inverse-propensity weights.

    At each record the policy makes one decision. If its realized action
    equals the logged one, the policy observes the logged reward and the
    event enters the estimate with weight ``1 / logging_prob``; otherwise the
    record is skipped and the policy is not updated.

    ``policy`` needs ``choose(context, rng) -> Decision`` and
    ``observe(decision, reward)``; its own probability bounds apply.
    """
    if len(log) == 0:
        raise ValueError("cannot replay an empty log")
    weights, rewards = [], []
    for rec in log:
        decision = policy.choose(rec.context, rng)
        if decision.realized_action != rec.action:
            continue
        policy.observe(decision, rec.reward)
        weights.append(1.0 / rec.logging_prob)
        rewards.append(rec.reward)
    weights = np.asarray(weights, dtype=float)
    rewards = np.asarray(rewards, dtype=float)
    weight_sum = float(weights.sum())
    value = float(weights @ rewards / weight_sum) if weight_sum > 0 else float("nan")
    return ReplayResult(value, len(weights), len(log), weight_sum, weights, rewards)


def generate_log(
    env: EnvironmentModel, logging_pi: float, horizon: int, rng: np.random.Generator
) -> List[LogRecord]:
    """Simulate a constant-probability logging policy.

    A nonzero action is sent with probability ``logging_pi``, chosen
    uniformly among the ``N`` nonzero actions.
    """
    if not 0.0 < logging_pi < 1.0:
        raise ValueError(f"logging_pi must lie in (0, 1), got {logging_pi}")
    n = env.n_actions
    records = []
    for t in range(int(horizon)):
        if env.variant == "nonstationary":
            env.gp_step(rng)
        context = env.gen_context(rng)
        if rng.random() < logging_pi:
            action = int(rng.integers(1, n + 1))
            prob = logging_pi / n
        else:
            action, prob = 0, 1.0 - logging_pi
        reward = env.realize_reward(context, action, rng)
        records.append(LogRecord(t, context, action, prob, reward))
    return records
