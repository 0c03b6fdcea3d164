"""Monte Carlo experiment harness.

Experiments are declarative configs; every trial draws its channel from an
RNG sub-stream derived from (seed, trial), so results are bit-reproducible
regardless of worker count. Trials run on a bounded thread pool capped by
the PIXELCODE_THREADS environment variable.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    codebook_correlation,
    equivalent_combiner,
    gain_upper_bound,
    pattern_spectrum,
    pattern_svd,
)
from .beamspace import isotropic_pattern, sample_virtual_channel
from .capacity import optimize_coding
from .codebook import Codebook, GlaConfig, TrainingSet, load_codebook, select_coder, train_codebook
from .errors import ConfigError, InfeasibleAll, ModelLoadError, PixelcodeError
from .gain import GainEvaluator
from .model import PixelAntennaModel, load_model
from .sebo import SeboConfig, exhaustive_maximize, sebo_maximize

EXPERIMENT_KINDS = (
    "siso-gain",
    "siso-gain-codebook",
    "mimo-capacity",
    "eadof",
    "correlation",
)
DEFAULT_SNR_GRID = tuple(float(v) for v in range(-10, 31, 5))

# sub-stream salts: trials sample with (seed, _SALT_TRIAL, t); everything
# else derives an integer seed so streams never collide
_SALT_TRIAL = 0
_SALT_SEBO = 1
_SALT_TRAINING_SET = 2
_SALT_GLA = 3
_SALT_TRAIN_SEBO = 4


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(tuple(parts)).generate_state(1, np.uint64)[0])


def worker_count() -> int:
    raw = os.environ.get("PIXELCODE_THREADS", "")
    if raw:
        try:
            count = int(raw)
        except ValueError as exc:
            raise ConfigError(f"PIXELCODE_THREADS must be an integer, got {raw!r}") from exc
        if count < 1:
            raise ConfigError("PIXELCODE_THREADS must be >= 1")
        return count
    return os.cpu_count() or 1


@dataclass
class ExperimentConfig:
    """Declarative Monte Carlo experiment description."""

    kind: str = "siso-gain"
    model_path: str | None = None
    model_t_path: str | None = None
    model_r_path: str | None = None
    codebook_path: str | None = None
    codebook_t_path: str | None = None
    codebook_r_path: str | None = None
    trials: int = 1000
    seed: int = 0
    k_angles: int | None = None  # None: take the model's K
    snr_db: tuple[float, ...] = DEFAULT_SNR_GRID
    n_t: int = 2
    n_r: int = 2
    modes: tuple[str, ...] = ("uniform",)
    method: str = "sebo"
    block_size: int = 10
    max_cycles: int = 50
    flip_rounds: int = 20
    flips_per_round: int = 1
    m_sizes: tuple[int, ...] = ()
    train_size: int = 1000
    epsilon: float = 1e-3
    i_max: int = 30
    threshold: float = 0.998
    output: str | None = None
    format: str = "csv"

    @classmethod
    def from_sources(cls, file_doc: dict | None = None, overrides: dict | None = None
                     ) -> "ExperimentConfig":
        """Build a config from a JSON document with CLI overrides on top."""
        known = {f.name for f in fields(cls)}
        merged: dict = {}
        for source in (file_doc or {}), (overrides or {}):
            for key, value in source.items():
                if value is None:
                    continue
                if key not in known:
                    raise ConfigError(f"unknown config field '{key}'")
                merged[key] = value
        for key in ("snr_db", "modes", "m_sizes"):
            if key in merged:
                merged[key] = tuple(merged[key])
        return cls(**merged)

    def validate(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind '{self.kind}'")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not all(np.isfinite(v) for v in self.snr_db):
            raise ConfigError("snr_db grid must be finite")
        if self.method not in ("sebo", "codebook", "exhaustive"):
            raise ConfigError(f"unknown method '{self.method}'")
        for mode in self.modes:
            if mode not in ("uniform", "waterfilling"):
                raise ConfigError(f"unknown allocation mode '{mode}'")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"unknown output format '{self.format}'")
        if any(m < 1 for m in self.m_sizes):
            raise ConfigError("codebook sizes must be >= 1")

    def sebo_config(self, seed: int) -> SeboConfig:
        return SeboConfig(
            block_size=self.block_size,
            max_cycles=self.max_cycles,
            flip_rounds=self.flip_rounds,
            flips_per_round=self.flips_per_round,
            seed=seed,
        )


@dataclass
class ResultSet:
    """Per-trial records plus aggregates and full provenance."""

    config: dict
    records: list[dict]
    aggregates: list[dict] = field(default_factory=list)
    version: str = __version__

    def to_json(self) -> bytes:
        doc = {
            "version": self.version,
            "config": self.config,
            "records": self.records,
            "aggregates": self.aggregates,
        }
        return json.dumps(doc).encode("utf-8")


_GROUP_KEYS = ("snr_db", "mode", "method", "m_size")


def _sort_token(value):
    if value is None:
        return (0, 0.0, "")
    if isinstance(value, (int, float)):
        return (1, float(value), "")
    return (2, 0.0, str(value))


def aggregate_records(records: list[dict]) -> list[dict]:
    """Group per-trial records and recompute means and standard errors."""
    metric = None
    for candidate in ("gain", "capacity"):
        if records and candidate in records[0]:
            metric = candidate
            break
    if metric is None:
        return []
    groups: dict[tuple, list[float]] = {}
    for record in records:
        key = tuple(record.get(k) for k in _GROUP_KEYS)
        groups.setdefault(key, []).append(float(record[metric]))
    rows = []
    for key in sorted(groups, key=lambda k: tuple(_sort_token(v) for v in k)):
        values = np.asarray(groups[key])
        row = {k: v for k, v in zip(_GROUP_KEYS, key) if v is not None}
        row["metric"] = metric
        row["n"] = int(values.size)
        row["mean"] = float(values.mean())
        row["std_error"] = (
            float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
        )
        rows.append(row)
    return rows


def _load_model_file(path: str | None, role: str) -> PixelAntennaModel:
    if path is None:
        raise ConfigError(f"experiment requires a {role} model path")
    try:
        return load_model(Path(path).read_bytes())
    except OSError as exc:
        raise ModelLoadError(f"cannot read {role} model '{path}': {exc}") from exc
    except PixelcodeError as exc:
        raise ModelLoadError(f"invalid {role} model '{path}': {exc}") from exc


def _load_codebook_file(path: str | None, role: str) -> Codebook:
    if path is None:
        raise ConfigError(f"experiment requires a {role} codebook path")
    try:
        return load_codebook(Path(path).read_bytes())
    except OSError as exc:
        raise ModelLoadError(f"cannot read {role} codebook '{path}': {exc}") from exc
    except PixelcodeError as exc:
        raise ModelLoadError(f"invalid {role} codebook '{path}': {exc}") from exc


def _resolve_k(config: ExperimentConfig, *models: PixelAntennaModel) -> int:
    k_values = {m.k_angles for m in models}
    if len(k_values) != 1:
        raise ConfigError(f"models disagree on k_angles: {sorted(k_values)}")
    k = k_values.pop()
    if config.k_angles is not None and config.k_angles != k:
        raise ConfigError(
            f"config k_angles = {config.k_angles} but model has K = {k}"
        )
    return k


def _pool_map(worker, count: int) -> list:
    threads = worker_count()
    if threads <= 1 or count <= 1:
        return [worker(t) for t in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(count)))


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng((seed, _SALT_TRIAL, trial))


def run_experiment(config: ExperimentConfig) -> ResultSet:
    """Execute one experiment; reproducible bit-exactly from (config, seed)."""
    config.validate()
    runner = {
        "siso-gain": _run_siso_gain,
        "siso-gain-codebook": _run_siso_gain_codebook,
        "mimo-capacity": _run_mimo_capacity,
        "eadof": _run_eadof,
        "correlation": _run_correlation,
    }[config.kind]
    records = runner(config)
    return ResultSet(
        config=asdict(config),
        records=records,
        aggregates=aggregate_records(records),
    )


def _run_siso_gain(config: ExperimentConfig) -> list[dict]:
    model = _load_model_file(config.model_path, "receive")
    k = _resolve_k(config, model)
    e_t = isotropic_pattern(k)
    evaluator = GainEvaluator(model, e_t)
    basis = pattern_svd(model, config.threshold)
    codebook = None
    if config.method == "codebook":
        codebook = _load_codebook_file(config.codebook_path, "selection")

    def worker(trial: int) -> dict:
        h_v = sample_virtual_channel(k, _trial_rng(config.seed, trial))
        bound = gain_upper_bound(basis, h_v, e_t)
        if config.method == "sebo":
            objective = evaluator.objective(h_v)
            trace = sebo_maximize(
                objective, model.q_switches,
                config.sebo_config(derive_seed(config.seed, _SALT_SEBO, trial)),
            )
            if trace.value == -np.inf:
                raise InfeasibleAll(f"trial {trial}: no feasible coder")
            gain, m_size = trace.value, None
        elif config.method == "exhaustive":
            objective = evaluator.objective(h_v)
            _, gain = exhaustive_maximize(objective, model.q_switches)
            if gain == -np.inf:
                raise InfeasibleAll(f"trial {trial}: no feasible coder")
            m_size = None
        else:
            _, _, gain = select_coder(codebook, model, h_v, e_t)
            m_size = codebook.m_size
        return {
            "trial": trial,
            "gain": gain,
            "upper_bound": bound,
            "method": config.method,
            "m_size": m_size,
            "seed": config.seed,
        }

    return _pool_map(worker, config.trials)


def _train_codebooks(config: ExperimentConfig, model: PixelAntennaModel, k: int
                     ) -> dict[int, Codebook]:
    training_set = TrainingSet.sample(
        k, config.train_size, seed=derive_seed(config.seed, _SALT_TRAINING_SET)
    )
    books: dict[int, Codebook] = {}
    previous: Codebook | None = None
    for m in sorted(config.m_sizes):
        # nested initialization: each size starts from the previous codebook
        init = previous.coders if previous is not None else None
        books[m] = train_codebook(
            model, training_set, m,
            GlaConfig(epsilon=config.epsilon, i_max=config.i_max,
                      seed=derive_seed(config.seed, _SALT_GLA, m)),
            config.sebo_config(derive_seed(config.seed, _SALT_TRAIN_SEBO, m)),
            init_coders=init,
        )
        previous = books[m]
    return books


def _run_siso_gain_codebook(config: ExperimentConfig) -> list[dict]:
    if not config.m_sizes:
        raise ConfigError("siso-gain-codebook requires at least one codebook size")
    model = _load_model_file(config.model_path, "receive")
    k = _resolve_k(config, model)
    e_t = isotropic_pattern(k)
    books = _train_codebooks(config, model, k)

    def worker(trial: int) -> list[dict]:
        h_v = sample_virtual_channel(k, _trial_rng(config.seed, trial))
        rows = []
        for m in sorted(books):
            _, _, gain = select_coder(books[m], model, h_v, e_t)
            rows.append({
                "trial": trial,
                "gain": gain,
                "method": "codebook",
                "m_size": m,
                "seed": config.seed,
            })
        return rows

    return [row for rows in _pool_map(worker, config.trials) for row in rows]


def _run_mimo_capacity(config: ExperimentConfig) -> list[dict]:
    model_t = _load_model_file(config.model_t_path or config.model_path, "transmit")
    model_r = _load_model_file(config.model_r_path or config.model_path, "receive")
    k = _resolve_k(config, model_t, model_r)
    codebook_t = codebook_r = None
    m_size = None
    if config.method == "codebook":
        codebook_t = _load_codebook_file(
            config.codebook_t_path or config.codebook_path, "transmit")
        codebook_r = _load_codebook_file(
            config.codebook_r_path or config.codebook_path, "receive")
        m_size = codebook_t.m_size
    elif config.method == "exhaustive":
        raise ConfigError("mimo-capacity supports methods 'sebo' and 'codebook'")
    noise_var = 1.0

    def worker(trial: int) -> list[dict]:
        h_v = sample_virtual_channel(k, _trial_rng(config.seed, trial))
        sebo_cfg = config.sebo_config(derive_seed(config.seed, _SALT_SEBO, trial))
        rows = []
        for snr_db in config.snr_db:
            power = 10.0 ** (snr_db / 10.0) * noise_var
            for mode in config.modes:
                design = optimize_coding(
                    model_t, model_r, config.n_t, config.n_r, h_v,
                    power, noise_var, mode=mode, method=config.method,
                    sebo_config=sebo_cfg, codebook_t=codebook_t,
                    codebook_r=codebook_r,
                )
                rows.append({
                    "trial": trial,
                    "snr_db": float(snr_db),
                    "capacity": design.capacity,
                    "mode": mode,
                    "method": config.method,
                    "m_size": m_size,
                    "seed": config.seed,
                })
        return rows

    return [row for rows in _pool_map(worker, config.trials) for row in rows]


def _run_eadof(config: ExperimentConfig) -> list[dict]:
    model = _load_model_file(config.model_path, "analysis")
    singular, cumulative = pattern_spectrum(model)
    basis = pattern_svd(model, config.threshold)
    return [{
        "singular_values": singular.tolist(),
        "cumulative_energy": cumulative.tolist(),
        "eadof": basis.eadof,
        "threshold": config.threshold,
    }]


def _run_correlation(config: ExperimentConfig) -> list[dict]:
    model = _load_model_file(config.model_path, "analysis")
    codebook = _load_codebook_file(config.codebook_path, "analysis")
    rho = codebook_correlation(model, codebook)
    basis = pattern_svd(model, config.threshold)
    deviations = [
        equivalent_combiner(basis, model, coder).norm_deviation
        for coder in codebook.coders
    ]
    singular, cumulative = pattern_spectrum(model)
    return [{
        "rho_re": rho.real.tolist(),
        "rho_im": rho.imag.tolist(),
        "combiner_norm_deviations": deviations,
        "eadof": basis.eadof,
        "threshold": config.threshold,
        "singular_values": singular.tolist(),
        "cumulative_energy": cumulative.tolist(),
        "m_size": codebook.m_size,
    }]


CSV_COLUMNS = ("trial", "snr_db", "gain_or_capacity", "method", "mode", "m_size", "seed")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_results(result_set: ResultSet, fmt: str, path: str) -> list[str]:
    """Write a result set to disk; returns the written file paths."""
    out = Path(path)
    if fmt == "json":
        out.write_bytes(result_set.to_json())
        return [str(out)]
    if fmt != "csv":
        raise ConfigError(f"unknown output format '{fmt}'")
    if result_set.records and not any(
        k in result_set.records[0] for k in ("gain", "capacity")
    ):
        raise ConfigError(
            "csv output needs per-trial records; use --format json for analysis reports"
        )
    lines = [",".join(CSV_COLUMNS)]
    for record in result_set.records:
        value = record.get("gain", record.get("capacity"))
        lines.append(",".join(_csv_cell(v) for v in (
            record.get("trial"),
            record.get("snr_db"),
            value,
            record.get("method"),
            record.get("mode"),
            record.get("m_size"),
            record.get("seed"),
        )))
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [str(out)]
