"""SVD-based structural analysis of a pixel antenna.

The open-circuit pattern matrix factors into orthogonal radiation patterns
weighted by singular values; the number of patterns needed to carry a
threshold fraction of the total singular energy is the antenna's effective
aerial degrees of freedom. In that basis a coded receive antenna acts as an
R-dimensional combiner, which yields a per-realization Cauchy-Schwarz upper
bound on the achievable channel gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModel, DimensionMismatch, ZeroPattern
from .model import PixelAntennaModel, ZERO_PATTERN_TOL, batch_patterns, port_currents

DEFAULT_ENERGY_THRESHOLD = 0.998


@dataclass(frozen=True)
class PatternBasis:
    """Leading-R truncation of the pattern matrix SVD."""

    u_matrix: np.ndarray
    singular_values: np.ndarray
    v_matrix: np.ndarray
    eadof: int
    threshold: float


def pattern_spectrum(model: PixelAntennaModel) -> tuple[np.ndarray, np.ndarray]:
    """Full singular values of e_oc and their cumulative energy fractions."""
    s = np.linalg.svd(model.e_oc, compute_uv=False)
    energy = np.cumsum(s**2)
    if energy[-1] == 0.0:
        raise DegenerateModel("e_oc is identically zero")
    return s, energy / energy[-1]


def pattern_svd(model: PixelAntennaModel,
                threshold: float = DEFAULT_ENERGY_THRESHOLD) -> PatternBasis:
    """Orthogonal pattern basis truncated at the energy threshold."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    u, s, vh = np.linalg.svd(model.e_oc, full_matrices=False)
    energy = np.cumsum(s**2)
    if energy[-1] == 0.0:
        raise DegenerateModel("e_oc is identically zero")
    cumulative = energy / energy[-1]
    r = int(np.argmax(cumulative >= threshold)) + 1
    return PatternBasis(
        u_matrix=u[:, :r],
        singular_values=s[:r].copy(),
        v_matrix=vh[:r].conj().T,
        eadof=r,
        threshold=threshold,
    )


@dataclass(frozen=True)
class CombinerResult:
    """Equivalent combiner vector and its deviation from unit norm.

    The deviation is nonzero exactly when the basis truncation discards
    pattern energy the coder actually radiates.
    """

    w: np.ndarray
    norm_deviation: float


def equivalent_combiner(basis: PatternBasis, model: PixelAntennaModel, coder
                        ) -> CombinerResult:
    """Combiner w = S V^H i(b), scaled by the pattern normalization."""
    currents = port_currents(model, coder)
    norm = float(np.linalg.norm(model.e_oc @ currents))
    if norm < ZERO_PATTERN_TOL:
        raise ZeroPattern(f"coder radiates nothing (norm {norm:.2e})")
    w = basis.singular_values * (basis.v_matrix.conj().T @ currents) / norm
    return CombinerResult(w=w, norm_deviation=abs(float(np.linalg.norm(w)) - 1.0))


def gain_upper_bound(basis: PatternBasis, h_v: np.ndarray, e_t: np.ndarray) -> float:
    """Per-realization bound ||U^H H_V e_t||^2 on any coder's channel gain."""
    h_v = np.asarray(h_v)
    e_t = np.asarray(e_t)
    if h_v.shape != (basis.u_matrix.shape[0], e_t.shape[0]):
        raise DimensionMismatch(
            f"channel {h_v.shape} does not match basis rows "
            f"{basis.u_matrix.shape[0]} and pattern length {e_t.shape[0]}"
        )
    projected = basis.u_matrix.conj().T @ (h_v @ e_t)
    return float(np.linalg.norm(projected) ** 2)


def codebook_correlation(model: PixelAntennaModel, codebook) -> np.ndarray:
    """Pairwise pattern correlation coefficients of the codebook entries.

    Equals the channel correlation matrix of the coded SISO channels under
    i.i.d. CN(0,1) virtual channels with unit-norm patterns.
    """
    coders = np.ascontiguousarray(codebook.coders, dtype=np.uint8)
    if coders.shape[1] != model.q_switches:
        raise DimensionMismatch(
            f"codebook is for Q = {coders.shape[1]}, model has Q = {model.q_switches}"
        )
    patterns, ok = batch_patterns(model, coders)
    norms = np.linalg.norm(patterns, axis=1)
    bad = np.flatnonzero(~ok | (norms < ZERO_PATTERN_TOL))
    if bad.size:
        raise ZeroPattern(f"codebook entry {bad[0]} radiates nothing", index=int(bad[0]))
    normalized = patterns / norms[:, None]
    return normalized.conj() @ normalized.T
