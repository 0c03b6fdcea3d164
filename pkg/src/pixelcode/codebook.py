"""Codebook training for antenna coding via generalized Lloyd iterations.

A codebook is an ordered set of M distinct coders. Training alternates a
nearest-neighbor partition of a channel training set (each realization goes
to the coder giving it the highest gain) with per-partition centroid
updates (block-exhaustive maximization of the partition's summed gain),
until the coders stop moving. Both steps never decrease the sample-average
gain, so the training objective is monotone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._kernels import batch_port_currents
from .errors import (
    DimensionMismatch,
    EmptyPartition,
    InfeasibleAll,
    InvalidConfig,
    ParseError,
)
from .gain import GainEvaluator, _quadratic_form_rows
from .model import PixelAntennaModel, ZERO_PATTERN_TOL
from .sebo import SeboConfig, sebo_maximize

CODEBOOK_FILE_VERSION = 1


@dataclass(frozen=True)
class GlaConfig:
    epsilon: float = 1e-3
    i_max: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise InvalidConfig("epsilon must be >= 0")
        if self.i_max < 1:
            raise InvalidConfig("i_max must be >= 1")


@dataclass(frozen=True)
class TrainingSet:
    """L virtual channel realizations plus the fixed transmit pattern."""

    h_v: np.ndarray
    e_t: np.ndarray

    def __len__(self) -> int:
        return self.h_v.shape[0]

    @classmethod
    def sample(cls, k_angles: int, length: int, seed: int = 0, e_t=None
               ) -> "TrainingSet":
        from .beamspace import isotropic_pattern, sample_virtual_channel

        if length < 1:
            raise InvalidConfig("training set length must be >= 1")
        n = 2 * k_angles
        stack = np.empty((length, n, n), dtype=np.complex128)
        for l in range(length):
            stack[l] = sample_virtual_channel(k_angles, np.random.default_rng((seed, l)))
        if e_t is None:
            e_t = isotropic_pattern(k_angles)
        return cls(h_v=stack, e_t=np.asarray(e_t, dtype=np.complex128))


@dataclass
class Codebook:
    """Ordered coder set with its training provenance."""

    coders: np.ndarray
    q_switches: int
    seed: int = 0
    training_size: int = 0
    iterations: int = 0
    final_avg_gain: float = float("nan")
    objective_history: list[float] = field(default_factory=list)

    @property
    def m_size(self) -> int:
        return self.coders.shape[0]


def save_codebook(codebook: Codebook) -> bytes:
    doc = {
        "version": CODEBOOK_FILE_VERSION,
        "q_switches": codebook.q_switches,
        "m_size": codebook.m_size,
        "coders": codebook.coders.astype(int).tolist(),
        "training": {
            "seed": codebook.seed,
            "training_size": codebook.training_size,
            "iterations": codebook.iterations,
            "final_avg_gain": codebook.final_avg_gain,
        },
    }
    return json.dumps(doc).encode("utf-8")


def load_codebook(data: bytes) -> Codebook:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"not a valid JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    if doc.get("version") != CODEBOOK_FILE_VERSION:
        raise ParseError(f"unsupported version {doc.get('version')}")
    q = doc.get("q_switches")
    coders_raw = doc.get("coders")
    if not isinstance(q, int) or q < 1:
        raise ParseError("q_switches must be a positive integer")
    if not isinstance(coders_raw, list) or not coders_raw:
        raise ParseError("coders must be a non-empty array")
    coders = np.asarray(coders_raw)
    if coders.ndim != 2 or coders.shape[1] != q:
        raise ParseError(f"coders shape {coders.shape} does not match q_switches {q}")
    if not np.all((coders == 0) | (coders == 1)):
        raise ParseError("coders entries must be 0 or 1")
    if len({row.tobytes() for row in coders.astype(np.uint8)}) != coders.shape[0]:
        raise ParseError("coders must be distinct")
    training = doc.get("training", {})
    return Codebook(
        coders=np.ascontiguousarray(coders, dtype=np.uint8),
        q_switches=q,
        seed=int(training.get("seed", 0)),
        training_size=int(training.get("training_size", 0)),
        iterations=int(training.get("iterations", 0)),
        final_avg_gain=float(training.get("final_avg_gain", float("nan"))),
    )


def select_coder(codebook: Codebook, model: PixelAntennaModel, h_v, e_t
                 ) -> tuple[int, np.ndarray, float]:
    """Best codebook entry for one realization; ties go to the smallest index."""
    if codebook.q_switches != model.q_switches:
        raise DimensionMismatch(
            f"codebook is for Q = {codebook.q_switches}, model has Q = {model.q_switches}"
        )
    evaluator = GainEvaluator(model, e_t)
    gains = evaluator.objective(h_v).batch(codebook.coders)
    index = int(np.argmax(gains))
    if gains[index] == -np.inf:
        raise InfeasibleAll("every codebook entry is infeasible for this model")
    return index, codebook.coders[index].copy(), float(gains[index])


def _projections(model: PixelAntennaModel, training_set: TrainingSet) -> np.ndarray:
    # (L, Q+1) stack of E_oc^H H_V e_t
    g = training_set.h_v @ training_set.e_t
    return g @ model.e_oc.conj()


def _gain_matrix(model: PixelAntennaModel, coders: np.ndarray,
                 projections: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """(M, L) gain of every coder on every realization; -inf when infeasible."""
    currents, ok = batch_port_currents(
        model.z_pp, model.z_pa, np.ascontiguousarray(coders, dtype=np.uint8)
    )
    amplitudes = currents.conj() @ projections.T
    energy = _quadratic_form_rows(currents, gram)
    feasible = ok & (energy > ZERO_PATTERN_TOL**2)
    safe = np.where(feasible, energy, 1.0)
    gains = np.abs(amplitudes) ** 2 / safe[:, None]
    gains[~feasible] = -np.inf
    return gains


def partition_training_set(coders, model: PixelAntennaModel,
                           training_set: TrainingSet) -> list[np.ndarray]:
    """Nearest-neighbor assignment; realization l joins its best coder's set."""
    coders = np.ascontiguousarray(coders, dtype=np.uint8)
    evaluator = GainEvaluator(model, training_set.e_t)
    gains = _gain_matrix(model, coders, _projections(model, training_set),
                         evaluator.gram)
    assign = np.argmax(gains, axis=0)
    return [np.flatnonzero(assign == m) for m in range(coders.shape[0])]


def centroid_update(partition_indices, model: PixelAntennaModel,
                    training_set: TrainingSet, sebo_config: SeboConfig | None = None,
                    init=None) -> np.ndarray:
    """Coder maximizing the summed gain over one partition's realizations."""
    indices = np.asarray(partition_indices, dtype=np.intp)
    if indices.size == 0:
        raise EmptyPartition("cannot update the centroid of an empty partition")
    evaluator = GainEvaluator(model, training_set.e_t)
    projections = _projections(model, training_set)[indices]
    objective = evaluator.sum_objective(projections)
    trace = sebo_maximize(objective, model.q_switches, sebo_config, init=init)
    return trace.coder


def _sample_initial_coders(model, m_size, evaluator, rng, fixed=None) -> np.ndarray:
    q = model.q_switches
    chosen: list[np.ndarray] = []
    seen: set[bytes] = set()

    def try_add(rows: np.ndarray):
        currents, ok = batch_port_currents(model.z_pp, model.z_pa, rows)
        energy = _quadratic_form_rows(currents, evaluator.gram)
        feasible = ok & (energy > ZERO_PATTERN_TOL**2)
        for row, good in zip(rows, feasible):
            if len(chosen) == m_size:
                return
            key = row.tobytes()
            if good and key not in seen:
                seen.add(key)
                chosen.append(row.copy())

    if fixed is not None:
        fixed = np.ascontiguousarray(fixed, dtype=np.uint8)
        if fixed.ndim != 2 or fixed.shape[1] != q or fixed.shape[0] > m_size:
            raise InvalidConfig(
                f"init_coders shape {fixed.shape} incompatible with M = {m_size}, Q = {q}"
            )
        try_add(fixed)
        if len(chosen) != fixed.shape[0]:
            raise InvalidConfig("init_coders must be distinct and feasible")

    if q <= 12:
        # small spaces: enumerate, filter, and draw without replacement
        from .sebo import _bits_from_ints

        universe = _bits_from_ints(np.arange(1 << q, dtype=np.uint64), q)
        order = rng.permutation(1 << q)
        try_add(universe[order])
    else:
        attempts = 0
        while len(chosen) < m_size and attempts < 400 * m_size + 4000:
            batch = rng.integers(0, 2, size=(64, q), dtype=np.uint8)
            try_add(batch)
            attempts += 64
    if len(chosen) < m_size:
        if not chosen:
            raise InfeasibleAll("no feasible coder found for this model")
        raise InfeasibleAll(
            f"only {len(chosen)} distinct feasible coders found, need {m_size}"
        )
    return np.vstack(chosen)


def _distinct_perturbation(coder, seen, evaluator, model, rng) -> np.ndarray:
    candidate = coder.copy()
    for _ in range(2000):
        candidate = candidate.copy()
        candidate[rng.integers(candidate.size)] ^= 1
        if candidate.tobytes() in seen:
            continue
        currents, ok = batch_port_currents(model.z_pp, model.z_pa, candidate[None, :])
        energy = _quadratic_form_rows(currents, evaluator.gram)
        if ok[0] and energy[0] > ZERO_PATTERN_TOL**2:
            return candidate
    raise InfeasibleAll("could not find a distinct feasible perturbation")


def train_codebook(model: PixelAntennaModel, training_set: TrainingSet, m_size: int,
                   gla_config: GlaConfig | None = None,
                   sebo_config: SeboConfig | None = None,
                   init_coders=None) -> Codebook:
    """Train an M-entry codebook on a channel training set.

    The per-iteration objective (summed best gain over the training set) is
    non-decreasing: partitions are exact per-realization argmaxes and
    centroid updates warm-start from the incumbent coder. Empty partitions
    are re-seeded by handing the worst-served half of the largest partition
    to a freshly optimized coder; duplicate centroids are perturbed by a
    random bit flip and re-optimized.
    """
    gla = gla_config or GlaConfig()
    sebo_cfg = sebo_config or SeboConfig()
    length = len(training_set)
    q = model.q_switches
    if m_size < 1:
        raise InvalidConfig("m_size must be >= 1")
    if length < m_size:
        raise InvalidConfig(f"training set has {length} < M = {m_size} realizations")
    if q <= 22 and m_size > (1 << q):
        raise InvalidConfig(f"m_size {m_size} exceeds the 2^{q} coder space")

    evaluator = GainEvaluator(model, training_set.e_t)
    projections = _projections(model, training_set)
    rng = np.random.default_rng(gla.seed)

    coders = _sample_initial_coders(model, m_size, evaluator, rng, fixed=init_coders)
    history: list[float] = []
    iterations = 0

    for iterations in range(1, gla.i_max + 1):
        gains = _gain_matrix(model, coders, projections, evaluator.gram)
        assign = np.argmax(gains, axis=0)
        history.append(float(gains[assign, np.arange(length)].sum()))
        partitions = [np.flatnonzero(assign == m) for m in range(m_size)]

        previous = coders.copy()
        updated = coders.copy()
        for m, part in enumerate(partitions):
            if part.size == 0:
                continue
            objective = evaluator.sum_objective(projections[part])
            updated[m] = sebo_maximize(objective, q, sebo_cfg, init=coders[m]).coder

        # hand each empty slot the worst-served half of the largest partition
        empty = [m for m, part in enumerate(partitions) if part.size == 0]
        for m in empty:
            largest = int(np.argmax([p.size for p in partitions]))
            part = partitions[largest]
            keeper_gains = _gain_matrix(
                model, updated[largest][None, :], projections[part], evaluator.gram
            )[0]
            worst = part[np.argsort(keeper_gains, kind="stable")[: max(1, part.size // 2)]]
            objective = evaluator.sum_objective(projections[worst])
            updated[m] = sebo_maximize(
                objective, q, sebo_cfg, init=updated[largest]
            ).coder

        seen: set[bytes] = set()
        for m in range(m_size):
            key = updated[m].tobytes()
            if key not in seen:
                seen.add(key)
                continue
            part = partitions[m]
            for _ in range(50):
                perturbed = _distinct_perturbation(updated[m], seen, evaluator, model, rng)
                if part.size:
                    objective = evaluator.sum_objective(projections[part])
                    perturbed = sebo_maximize(
                        objective, q, sebo_cfg, init=perturbed
                    ).coder
                if perturbed.tobytes() not in seen:
                    updated[m] = perturbed
                    break
            else:
                updated[m] = _distinct_perturbation(updated[m], seen, evaluator, model, rng)
            seen.add(updated[m].tobytes())

        coders = updated
        movement = np.sqrt(
            np.sum(np.abs(coders.astype(int) - previous.astype(int)), axis=1)
        ).sum()
        weight = np.sqrt(coders.sum(axis=1)).sum()
        if movement == 0.0 or (weight > 0 and movement / weight <= gla.epsilon):
            break

    gains = _gain_matrix(model, coders, projections, evaluator.gram)
    final_total = float(gains.max(axis=0).sum())
    history.append(final_total)

    return Codebook(
        coders=coders,
        q_switches=q,
        seed=gla.seed,
        training_size=length,
        iterations=iterations,
        final_avg_gain=final_total / length,
        objective_history=history,
    )
