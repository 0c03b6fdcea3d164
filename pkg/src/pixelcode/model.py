"""Multiport-network model of a switch-reconfigurable pixel antenna.

A pixel antenna with Q switches is a (Q+1)-port circuit network: one
antenna port followed by Q pixel ports. It is described by its full port
impedance matrix and by the open-circuit radiation pattern matrix whose
columns are the per-port patterns (theta-polarization rows first, then
phi-polarization rows, K sampled angles each). A coder is a length-Q
binary vector of switch states: 0 shorts a pixel port, 1 opens it.

Shorted ports carry the currents that solve the reduced on-switch
subsystem; opened ports carry exactly zero current. The realized pattern
is the open-circuit pattern matrix times the resulting current vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._kernels import batch_port_currents
from .errors import (
    DimensionMismatch,
    InvalidSpec,
    ParseError,
    SingularNetwork,
    ValidationFailed,
    ZeroPattern,
)

RECIPROCITY_TOL = 1e-9
PASSIVITY_TOL = 1e-9
SINGULARITY_RCOND = 1e-12
ZERO_PATTERN_TOL = 1e-12

MODEL_FILE_VERSION = 1


@dataclass(frozen=True)
class PixelAntennaModel:
    """Immutable (Q+1)-port description of a pixel antenna.

    z_matrix is the full (Q+1)x(Q+1) impedance matrix in ohms; e_oc is the
    2K x (Q+1) open-circuit pattern matrix. frequency_hz is metadata only.
    """

    q_switches: int
    k_angles: int
    z_matrix: np.ndarray
    e_oc: np.ndarray
    frequency_hz: float = 0.0

    def __post_init__(self):
        z = np.ascontiguousarray(self.z_matrix, dtype=np.complex128)
        e = np.ascontiguousarray(self.e_oc, dtype=np.complex128)
        z.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "z_matrix", z)
        object.__setattr__(self, "e_oc", e)

    @property
    def z_pp(self) -> np.ndarray:
        return self.z_matrix[1:, 1:]

    @property
    def z_pa(self) -> np.ndarray:
        return self.z_matrix[1:, 0]

    def __eq__(self, other):
        if not isinstance(other, PixelAntennaModel):
            return NotImplemented
        return (
            self.q_switches == other.q_switches
            and self.k_angles == other.k_angles
            and self.frequency_hz == other.frequency_hz
            and np.array_equal(self.z_matrix, other.z_matrix)
            and np.array_equal(self.e_oc, other.e_oc)
        )


@dataclass(frozen=True)
class SynthesisSpec:
    """Recipe for a random but physically consistent synthetic model.

    The real part of the impedance matrix is built as a Gram matrix, which
    guarantees passivity; an optional prescribed singular spectrum is
    imposed on the pattern matrix by re-factoring its SVD.
    """

    q_switches: int
    k_angles: int
    resistance_scale: float = 1.0
    reactance_scale: float = 1.0
    singular_spectrum: tuple[float, ...] | None = None
    seed: int = 0
    frequency_hz: float = 2.4e9


def coder_array(coder, q_switches: int) -> np.ndarray:
    """Validate a coder against a model's switch count; return uint8 bits."""
    bits = np.asarray(coder)
    if bits.ndim != 1 or bits.shape[0] != q_switches:
        raise DimensionMismatch(
            f"coder has length {bits.shape[0] if bits.ndim == 1 else bits.shape}, "
            f"expected {q_switches}"
        )
    if not np.all((bits == 0) | (bits == 1)):
        raise DimensionMismatch("coder entries must be 0 or 1")
    return np.ascontiguousarray(bits, dtype=np.uint8)


def validate_model(model: PixelAntennaModel) -> list[str]:
    """Return the list of violated invariants (empty means valid)."""
    report = []
    q, k = model.q_switches, model.k_angles
    z, e = model.z_matrix, model.e_oc

    if q < 1:
        report.append(f"q_switches must be >= 1, got {q}")
    if k < 1:
        report.append(f"k_angles must be >= 1, got {k}")
    if z.shape != (q + 1, q + 1):
        report.append(f"z_matrix shape {z.shape} != ({q + 1}, {q + 1})")
        return report
    if not np.all(np.isfinite(z)):
        report.append("z_matrix has non-finite entries")
        return report

    scale = np.max(np.abs(z))
    if np.max(np.abs(z - z.T)) > RECIPROCITY_TOL * max(scale, 1.0):
        report.append("reciprocity violated: z_matrix is not symmetric")

    re_z = 0.5 * (z.real + z.real.T)
    eigs = np.linalg.eigvalsh(re_z)
    if eigs[0] < -PASSIVITY_TOL * max(eigs[-1], 0.0):
        report.append(
            f"passivity violated: Re(z_matrix) has eigenvalue {eigs[0]:.3e}"
        )

    if e.shape != (2 * k, q + 1):
        report.append(f"e_oc shape {e.shape} != ({2 * k}, {q + 1})")
    elif not np.all(np.isfinite(e)):
        report.append("e_oc has non-finite entries")

    return report


def port_currents(model: PixelAntennaModel, coder, antenna_current: complex = 1.0
                  ) -> np.ndarray:
    """Port currents [i_A, i_P1, ..., i_PQ] under the given coder.

    Off switches (bit 1) carry exactly zero current; on switches solve the
    reduced short-circuit subsystem. Raises SingularNetwork when that
    subsystem's reciprocal condition number falls below 1e-12.
    """
    bits = coder_array(coder, model.q_switches)
    on = np.flatnonzero(bits == 0)
    currents = np.zeros(model.q_switches + 1, dtype=np.complex128)
    currents[0] = antenna_current
    if on.size == 0:
        return currents
    sub = model.z_pp[np.ix_(on, on)]
    sv = np.linalg.svd(sub, compute_uv=False)
    if sv[-1] <= SINGULARITY_RCOND * sv[0]:
        raise SingularNetwork(
            f"on-switch subsystem is singular (rcond ~ {sv[-1] / sv[0]:.2e})"
        )
    currents[on + 1] = np.linalg.solve(sub, -model.z_pa[on]) * antenna_current
    return currents


def radiation_pattern(model: PixelAntennaModel, coder, normalize: bool = False
                      ) -> np.ndarray:
    """Realized far-field pattern for a coder, with unit antenna current."""
    pattern = model.e_oc @ port_currents(model, coder)
    if not normalize:
        return pattern
    norm = np.linalg.norm(pattern)
    if norm < ZERO_PATTERN_TOL:
        raise ZeroPattern(f"coder radiates nothing (norm {norm:.2e})")
    return pattern / norm


def batch_patterns(model: PixelAntennaModel, bits_matrix: np.ndarray
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized patterns for a batch of coders via the kernel backend.

    Returns (patterns, ok): rows of ``patterns`` with ``ok`` False are
    meaningless (singular subsystem) and must be treated as infeasible.
    """
    currents, ok = batch_port_currents(model.z_pp, model.z_pa, bits_matrix)
    return currents @ model.e_oc.T, ok


def synthesize_model(spec: SynthesisSpec) -> PixelAntennaModel:
    """Deterministically generate a valid model from a synthesis spec."""
    if spec.q_switches < 1 or spec.k_angles < 1:
        raise InvalidSpec("q_switches and k_angles must be >= 1")
    if not (np.isfinite(spec.resistance_scale) and spec.resistance_scale > 0):
        raise InvalidSpec("resistance_scale must be positive and finite")
    if not np.isfinite(spec.reactance_scale):
        raise InvalidSpec("reactance_scale must be finite")

    q, k = spec.q_switches, spec.k_angles
    rng = np.random.default_rng(spec.seed)

    gram_factor = rng.standard_normal((q + 1, q + 1))
    re_z = gram_factor @ gram_factor.T * spec.resistance_scale
    x_raw = rng.standard_normal((q + 1, q + 1))
    im_z = 0.5 * (x_raw + x_raw.T) * spec.reactance_scale
    z = re_z + 1j * im_z

    e_oc = (
        rng.standard_normal((2 * k, q + 1)) + 1j * rng.standard_normal((2 * k, q + 1))
    ) / np.sqrt(2.0)

    if spec.singular_spectrum is not None:
        s = np.asarray(spec.singular_spectrum, dtype=np.float64)
        if s.ndim != 1 or s.size == 0 or s.size > min(2 * k, q + 1):
            raise InvalidSpec(
                f"singular_spectrum length {s.size} not in [1, {min(2 * k, q + 1)}]"
            )
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise InvalidSpec("singular_spectrum must be finite and nonnegative")
        if np.any(np.diff(s) > 0):
            raise InvalidSpec("singular_spectrum must be non-increasing")
        u, _, vh = np.linalg.svd(e_oc, full_matrices=False)
        full = np.zeros(min(2 * k, q + 1))
        full[: s.size] = s
        e_oc = (u * full) @ vh

    model = PixelAntennaModel(
        q_switches=q,
        k_angles=k,
        z_matrix=z,
        e_oc=e_oc,
        frequency_hz=spec.frequency_hz,
    )
    report = validate_model(model)
    if report:
        raise ValidationFailed(report)
    return model


def _require(doc: dict, field: str, kind):
    if field not in doc:
        raise ParseError(f"missing field '{field}'")
    value = doc[field]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ParseError(f"field '{field}' has wrong type {type(value).__name__}")
    return value


def _complex_matrix(doc: dict, re_field: str, im_field: str, shape, what: str
                    ) -> np.ndarray:
    re_raw = _require(doc, re_field, list)
    im_raw = _require(doc, im_field, list)
    count = shape[0] * shape[1]
    for field, raw in ((re_field, re_raw), (im_field, im_raw)):
        if len(raw) != count:
            raise ParseError(
                f"{what}: {field} has {len(raw)} entries, expected "
                f"{count} ({shape[0]} rows x {shape[1]} columns)"
            )
    try:
        re = np.asarray(re_raw, dtype=np.float64).reshape(shape)
        im = np.asarray(im_raw, dtype=np.float64).reshape(shape)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: {exc}") from exc
    if not (np.all(np.isfinite(re)) and np.all(np.isfinite(im))):
        raise ParseError(f"{what}: non-finite entries")
    return re + 1j * im


def save_model(model: PixelAntennaModel) -> bytes:
    """Serialize a model to its UTF-8 JSON document."""
    doc = {
        "version": MODEL_FILE_VERSION,
        "frequency_hz": model.frequency_hz,
        "q_switches": model.q_switches,
        "k_angles": model.k_angles,
        "z_re": model.z_matrix.real.ravel().tolist(),
        "z_im": model.z_matrix.imag.ravel().tolist(),
        "e_oc_re": model.e_oc.real.ravel().tolist(),
        "e_oc_im": model.e_oc.imag.ravel().tolist(),
    }
    return json.dumps(doc).encode("utf-8")


def load_model(data: bytes) -> PixelAntennaModel:
    """Parse and validate a model document produced by save_model."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"not a valid JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")

    version = _require(doc, "version", int)
    if version != MODEL_FILE_VERSION:
        raise ParseError(f"unsupported version {version}")
    q = _require(doc, "q_switches", int)
    k = _require(doc, "k_angles", int)
    if q < 1:
        raise ParseError("q_switches must be >= 1")
    if k < 1:
        raise ParseError("k_angles must be >= 1")
    frequency = _require(doc, "frequency_hz", float)
    if not np.isfinite(frequency):
        raise ParseError("frequency_hz must be finite")

    z = _complex_matrix(doc, "z_re", "z_im", (q + 1, q + 1), "z entries")
    e_oc = _complex_matrix(doc, "e_oc_re", "e_oc_im", (2 * k, q + 1), "e_oc columns")

    model = PixelAntennaModel(
        q_switches=q, k_angles=k, z_matrix=z, e_oc=e_oc, frequency_hz=frequency
    )
    report = validate_model(model)
    if report:
        raise ValidationFailed(report)
    return model
