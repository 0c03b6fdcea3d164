"""Command-line front-end.

Exit codes: 0 on success, 1 on configuration or validation errors
(including usage errors), 2 on runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import pattern_svd
from .codebook import GlaConfig, TrainingSet, save_codebook, train_codebook
from .errors import (
    ConfigError,
    InvalidConfig,
    InvalidSpec,
    ModelLoadError,
    ParseError,
    PixelcodeError,
    ValidationFailed,
)
from .harness import (
    ExperimentConfig,
    _load_model_file,
    derive_seed,
    emit_results,
    run_experiment,
)
from .model import SynthesisSpec, load_model, save_model, synthesize_model, validate_model
from .sebo import SeboConfig

_CONFIG_ERRORS = (
    ConfigError,
    InvalidConfig,
    InvalidSpec,
    ParseError,
    ValidationFailed,
    ModelLoadError,
)


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we want exit 1
        raise _UsageError(self, message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def _build_parser() -> _Parser:
    parser = _Parser(prog="pixelcode", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen-model", help="synthesize a random valid model file")
    gen.add_argument("--q", type=int, required=True, help="number of switches")
    gen.add_argument("--k", type=int, default=72, help="number of sampled angles")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--resistance-scale", type=float, default=1.0)
    gen.add_argument("--reactance-scale", type=float, default=1.0)
    gen.add_argument("--spectrum", type=str, default=None,
                     help="comma-separated prescribed singular values of e_oc")
    gen.add_argument("--frequency-hz", type=float, default=2.4e9)
    gen.add_argument("-o", "--output", required=True)

    val = sub.add_parser("validate", help="validate a model file")
    val.add_argument("model")

    ead = sub.add_parser("eadof", help="effective aerial degrees of freedom")
    ead.add_argument("--model", required=True)
    ead.add_argument("--threshold", type=float, default=0.998)
    ead.add_argument("-o", "--output", default=None, help="write full report JSON")

    corr = sub.add_parser("correlation", help="codebook pattern correlation report")
    corr.add_argument("--model", required=True)
    corr.add_argument("--codebook", required=True)
    corr.add_argument("--threshold", type=float, default=0.998)
    corr.add_argument("-o", "--output", default=None)

    train = sub.add_parser("train-codebook", help="train and save a codebook")
    train.add_argument("--model", required=True)
    train.add_argument("--m-size", type=int, required=True)
    train.add_argument("--train-size", type=int, default=1000)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--epsilon", type=float, default=1e-3)
    train.add_argument("--i-max", type=int, default=30)
    train.add_argument("--block-size", type=int, default=10)
    train.add_argument("--max-cycles", type=int, default=50)
    train.add_argument("--flip-rounds", type=int, default=20)
    train.add_argument("-o", "--output", required=True)

    siso = sub.add_parser("siso-gain", help="Monte Carlo SISO channel-gain experiment")
    siso.add_argument("--config", default=None, help="JSON config file; flags override")
    siso.add_argument("--model", dest="model_path", default=None)
    siso.add_argument("--trials", type=int, default=None)
    siso.add_argument("--seed", type=int, default=None)
    siso.add_argument("--method", choices=["sebo", "exhaustive", "codebook"], default=None)
    siso.add_argument("--codebook", dest="codebook_path", default=None)
    siso.add_argument("--m-sizes", type=str, default=None,
                      help="train codebooks of these sizes and evaluate selection")
    siso.add_argument("--train-size", type=int, default=None)
    siso.add_argument("--block-size", type=int, default=None)
    siso.add_argument("--flip-rounds", type=int, default=None)
    siso.add_argument("-o", "--output", default=None)
    siso.add_argument("--format", choices=["csv", "json"], default=None)

    mimo = sub.add_parser("mimo-capacity", help="Monte Carlo MIMO capacity experiment")
    mimo.add_argument("--config", default=None)
    mimo.add_argument("--model", dest="model_path", default=None,
                      help="model for both link ends")
    mimo.add_argument("--model-t", dest="model_t_path", default=None)
    mimo.add_argument("--model-r", dest="model_r_path", default=None)
    mimo.add_argument("--nt", type=int, default=None)
    mimo.add_argument("--nr", type=int, default=None)
    mimo.add_argument("--trials", type=int, default=None)
    mimo.add_argument("--seed", type=int, default=None)
    mimo.add_argument("--snr-db", type=str, default=None, help="comma-separated dB grid")
    mimo.add_argument("--modes", type=str, default=None,
                      help="comma-separated: uniform,waterfilling")
    mimo.add_argument("--method", choices=["sebo", "codebook"], default=None)
    mimo.add_argument("--codebook", dest="codebook_path", default=None)
    mimo.add_argument("--codebook-t", dest="codebook_t_path", default=None)
    mimo.add_argument("--codebook-r", dest="codebook_r_path", default=None)
    mimo.add_argument("--block-size", type=int, default=None)
    mimo.add_argument("--flip-rounds", type=int, default=None)
    mimo.add_argument("-o", "--output", default=None)
    mimo.add_argument("--format", choices=["csv", "json"], default=None)

    return parser


def _cmd_gen_model(args) -> int:
    spectrum = None
    if args.spectrum is not None:
        spectrum = tuple(_float_list(args.spectrum))
    spec = SynthesisSpec(
        q_switches=args.q,
        k_angles=args.k,
        resistance_scale=args.resistance_scale,
        reactance_scale=args.reactance_scale,
        singular_spectrum=spectrum,
        seed=args.seed,
        frequency_hz=args.frequency_hz,
    )
    Path(args.output).write_bytes(save_model(synthesize_model(spec)))
    print(f"wrote model (Q={args.q}, K={args.k}) to {args.output}")
    return 0


def _cmd_validate(args) -> int:
    try:
        data = Path(args.model).read_bytes()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        model = load_model(data)
    except ValidationFailed as exc:
        for violation in exc.report:
            print(f"invalid: {violation}", file=sys.stderr)
        return 1
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    report = validate_model(model)
    if report:
        for violation in report:
            print(f"invalid: {violation}", file=sys.stderr)
        return 1
    print(f"valid model: Q={model.q_switches}, K={model.k_angles}")
    return 0


def _cmd_eadof(args) -> int:
    config = ExperimentConfig(kind="eadof", model_path=args.model,
                              threshold=args.threshold, format="json")
    result = run_experiment(config)
    report = result.records[0]
    print(f"EADoF = {report['eadof']} (threshold {args.threshold})")
    if args.output:
        emit_results(result, "json", args.output)
    return 0


def _cmd_correlation(args) -> int:
    config = ExperimentConfig(kind="correlation", model_path=args.model,
                              codebook_path=args.codebook,
                              threshold=args.threshold, format="json")
    result = run_experiment(config)
    report = result.records[0]
    print(f"correlation matrix for M = {report['m_size']} codebook entries")
    if args.output:
        emit_results(result, "json", args.output)
    return 0


def _cmd_train_codebook(args) -> int:
    model = _load_model_file(args.model, "training")
    training_set = TrainingSet.sample(
        model.k_angles, args.train_size, seed=derive_seed(args.seed, 2)
    )
    codebook = train_codebook(
        model, training_set, args.m_size,
        GlaConfig(epsilon=args.epsilon, i_max=args.i_max,
                  seed=derive_seed(args.seed, 3, args.m_size)),
        SeboConfig(block_size=args.block_size, max_cycles=args.max_cycles,
                   flip_rounds=args.flip_rounds,
                   seed=derive_seed(args.seed, 4, args.m_size)),
    )
    Path(args.output).write_bytes(save_codebook(codebook))
    print(
        f"trained M={codebook.m_size} codebook in {codebook.iterations} iterations, "
        f"avg train gain {codebook.final_avg_gain:.4f}; wrote {args.output}"
    )
    return 0


def _experiment_overrides(args, kind: str) -> dict:
    overrides = {"kind": kind}
    for key in (
        "model_path", "model_t_path", "model_r_path", "codebook_path",
        "codebook_t_path", "codebook_r_path", "trials", "seed", "method",
        "train_size", "block_size", "flip_rounds", "output", "format",
    ):
        if hasattr(args, key) and getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    if getattr(args, "nt", None) is not None:
        overrides["n_t"] = args.nt
    if getattr(args, "nr", None) is not None:
        overrides["n_r"] = args.nr
    if getattr(args, "snr_db", None) is not None:
        overrides["snr_db"] = _float_list(args.snr_db)
    if getattr(args, "modes", None) is not None:
        overrides["modes"] = args.modes.split(",")
    if getattr(args, "m_sizes", None) is not None:
        overrides["m_sizes"] = _int_list(args.m_sizes)
        if kind == "siso-gain":
            overrides["kind"] = "siso-gain-codebook"
            overrides.setdefault("method", "codebook")
    return overrides


def _cmd_experiment(args, kind: str) -> int:
    file_doc = None
    if getattr(args, "config", None):
        try:
            file_doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    config = ExperimentConfig.from_sources(file_doc, _experiment_overrides(args, kind))
    result = run_experiment(config)
    for row in result.aggregates:
        keys = ", ".join(
            f"{k}={row[k]}" for k in ("snr_db", "mode", "method", "m_size") if k in row
        )
        print(
            f"{row['metric']} mean={row['mean']:.6g} "
            f"std_err={row['std_error']:.3g} n={row['n']}" + (f" [{keys}]" if keys else "")
        )
    if config.output:
        paths = emit_results(result, config.format, config.output)
        print(f"wrote {', '.join(paths)}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    handlers = {
        "gen-model": _cmd_gen_model,
        "validate": _cmd_validate,
        "eadof": _cmd_eadof,
        "correlation": _cmd_correlation,
        "train-codebook": _cmd_train_codebook,
        "siso-gain": lambda a: _cmd_experiment(a, "siso-gain"),
        "mimo-capacity": lambda a: _cmd_experiment(a, "mimo-capacity"),
    }
    try:
        return handlers[args.command](args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PixelcodeError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
