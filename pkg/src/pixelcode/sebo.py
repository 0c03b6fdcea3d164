"""Block-exhaustive maximization over binary vectors.

Step 1 partitions the Q bits into contiguous blocks and cyclically replaces
each block with its exhaustively best assignment (others held fixed) until
a full cycle brings no improvement. Step 2 escapes local optima by flipping
random bits in the converged solution and re-running Step 1, keeping the
better result. A full enumeration oracle is provided for small Q.

Objectives are callables from a bit vector to a float (or -inf for
infeasible coders); an optional ``batch`` method taking an (n, Q) bit
matrix lets the optimizer evaluate whole blocks through the vectorized
kernel path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidConfig, TooLarge

EXHAUSTIVE_MAX_BITS = 22
_CHUNK = 1 << 14


@dataclass(frozen=True)
class SeboConfig:
    block_size: int = 10
    max_cycles: int = 50
    flip_rounds: int = 20
    flips_per_round: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.block_size <= 20:
            raise InvalidConfig(f"block_size must be in [1, 20], got {self.block_size}")
        if self.max_cycles < 1:
            raise InvalidConfig("max_cycles must be >= 1")
        if self.flip_rounds < 0:
            raise InvalidConfig("flip_rounds must be >= 0")
        if self.flips_per_round < 1:
            raise InvalidConfig("flips_per_round must be >= 1")


@dataclass
class OptimizationTrace:
    """Improvement history of one optimizer run; values are non-decreasing."""

    improvements: list[tuple[int, float]] = field(default_factory=list)
    coder: np.ndarray | None = None
    value: float = -np.inf
    evaluations: int = 0


def _bits_from_ints(ints: np.ndarray, width: int) -> np.ndarray:
    # bit 0 of the vector is the most significant enumeration bit, so
    # ascending integers enumerate bit vectors in lexicographic order
    shifts = np.arange(width - 1, -1, -1, dtype=np.uint64)
    return ((ints[:, None] >> shifts) & 1).astype(np.uint8)


@lru_cache(maxsize=32)
def _block_patterns(width: int) -> np.ndarray:
    patterns = _bits_from_ints(np.arange(1 << width, dtype=np.uint64), width)
    patterns.setflags(write=False)
    return patterns


def _batch_evaluator(objective):
    batch = getattr(objective, "batch", None)
    if batch is not None:
        return batch
    return lambda rows: np.array([objective(row) for row in rows], dtype=np.float64)


def sebo_maximize(objective, q: int, config: SeboConfig | None = None, init=None
                  ) -> OptimizationTrace:
    """Maximize an objective over {0,1}^q; deterministic in config.seed."""
    if q < 1:
        raise InvalidConfig(f"q must be >= 1, got {q}")
    if config is None:
        config = SeboConfig()
    evaluate = _batch_evaluator(objective)
    rng = np.random.default_rng(config.seed)

    bits = (
        np.zeros(q, dtype=np.uint8)
        if init is None
        else np.ascontiguousarray(init, dtype=np.uint8).copy()
    )
    if bits.shape != (q,):
        raise InvalidConfig(f"init has shape {bits.shape}, expected ({q},)")

    trace = OptimizationTrace()
    blocks = [
        (lo, min(lo + config.block_size, q)) for lo in range(0, q, config.block_size)
    ]
    cycle = 0

    def evaluate_one(row: np.ndarray) -> float:
        trace.evaluations += 1
        return float(evaluate(row[None, :])[0])

    def record(value: float) -> None:
        # the trace follows the incumbent best, not within-restart progress
        if not trace.improvements or value > trace.improvements[-1][1]:
            trace.improvements.append((cycle, value))

    def block_descent(bits: np.ndarray, value: float) -> tuple[np.ndarray, float]:
        nonlocal cycle
        for _ in range(config.max_cycles):
            cycle += 1
            improved = False
            for lo, hi in blocks:
                patterns = _block_patterns(hi - lo)
                candidates = np.repeat(bits[None, :], patterns.shape[0], axis=0)
                candidates[:, lo:hi] = patterns
                values = evaluate(candidates)
                trace.evaluations += candidates.shape[0]
                best = int(np.argmax(values))
                if values[best] > value:
                    bits = candidates[best].copy()
                    value = float(values[best])
                    improved = True
                    record(value)
            if not improved:
                break
        return bits, value

    value = evaluate_one(bits)
    trace.improvements.append((cycle, value))
    bits, value = block_descent(bits, value)

    for _ in range(config.flip_rounds):
        candidate = bits.copy()
        flips = rng.choice(q, size=min(config.flips_per_round, q), replace=False)
        candidate[flips] ^= 1
        candidate, cand_value = block_descent(candidate, evaluate_one(candidate))
        if cand_value > value:
            bits, value = candidate, cand_value
            record(value)

    trace.coder = bits
    trace.value = value
    return trace


def exhaustive_maximize(objective, q: int) -> tuple[np.ndarray, float]:
    """Global maximum over all 2^q coders; lexicographic smallest on ties."""
    if q < 1:
        raise InvalidConfig(f"q must be >= 1, got {q}")
    if q > EXHAUSTIVE_MAX_BITS:
        raise TooLarge(f"q = {q} exceeds the exhaustive guard {EXHAUSTIVE_MAX_BITS}")
    evaluate = _batch_evaluator(objective)
    best_bits = None
    best_value = -np.inf
    total = 1 << q
    for start in range(0, total, _CHUNK):
        ints = np.arange(start, min(start + _CHUNK, total), dtype=np.uint64)
        candidates = _bits_from_ints(ints, q)
        values = evaluate(candidates)
        idx = int(np.argmax(values))
        if best_bits is None or values[idx] > best_value:
            best_bits = candidates[idx].copy()
            best_value = float(values[idx])
    return best_bits, best_value
