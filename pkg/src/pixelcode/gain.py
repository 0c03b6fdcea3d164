"""Channel-gain objectives over antenna coders.

For a receive pixel antenna with pattern matrix E and a fixed channel
projection g = H_V @ e_t, the gain of coder b with normalized pattern is

    |e(b)^H g|^2 / ||e(b)||^2
        = i(b)^H (c c^H) i(b) / i(b)^H (E^H E) i(b),   c = E^H g,

a ratio of Hermitian quadratic forms in the (Q+1)-dimensional port-current
vector. Summing over a set of channel realizations only changes the
numerator matrix to C C^H, so partition objectives in codebook training
cost the same per candidate as single-realization ones. This module owns
that reduction; the batched current solves go through the kernel backend.
"""

from __future__ import annotations

import numpy as np

from ._kernels import batch_port_currents
from .model import ZERO_PATTERN_TOL, PixelAntennaModel

_DEN_FLOOR = ZERO_PATTERN_TOL**2


def _quadratic_form_rows(vectors: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    # row-wise v^H M v for Hermitian M; real by symmetry
    return np.einsum(
        "ij,ij->i", vectors.conj(), vectors @ matrix.T, optimize=True
    ).real


class QuadraticGainObjective:
    """Maximization objective  i(b)^H A i(b) / i(b)^H G i(b).

    A and G are Hermitian PSD in current space; infeasible coders (singular
    on-subsystem or vanishing pattern energy) evaluate to -inf.
    """

    def __init__(self, z_pp, z_pa, numerator, gram):
        self.z_pp = np.ascontiguousarray(z_pp, dtype=np.complex128)
        self.z_pa = np.ascontiguousarray(z_pa, dtype=np.complex128)
        self.numerator = np.ascontiguousarray(numerator, dtype=np.complex128)
        self.gram = np.ascontiguousarray(gram, dtype=np.complex128)

    def batch(self, bits_matrix: np.ndarray) -> np.ndarray:
        bits = np.ascontiguousarray(bits_matrix, dtype=np.uint8)
        currents, ok = batch_port_currents(self.z_pp, self.z_pa, bits)
        num = _quadratic_form_rows(currents, self.numerator)
        den = _quadratic_form_rows(currents, self.gram)
        feasible = ok & (den > _DEN_FLOOR)
        with np.errstate(divide="ignore", invalid="ignore"):
            values = np.where(feasible, num / np.where(feasible, den, 1.0), -np.inf)
        return values

    def __call__(self, bits) -> float:
        return float(self.batch(np.asarray(bits, dtype=np.uint8)[None, :])[0])


class GainEvaluator:
    """Per-(model, transmit pattern) precomputation for gain objectives."""

    def __init__(self, model: PixelAntennaModel, e_t: np.ndarray):
        e_t = np.asarray(e_t, dtype=np.complex128)
        if e_t.shape != (2 * model.k_angles,):
            raise ValueError(
                f"transmit pattern length {e_t.shape} != {2 * model.k_angles}"
            )
        self.model = model
        self.e_t = e_t
        self.gram = model.e_oc.conj().T @ model.e_oc

    def project(self, h_v: np.ndarray) -> np.ndarray:
        """Channel projection c = E_oc^H (H_V e_t) for one realization."""
        return model_projection(self.model, h_v, self.e_t)

    def objective(self, h_v: np.ndarray) -> QuadraticGainObjective:
        """Single-realization gain objective |e(b)^H H_V e_t|^2 (normalized)."""
        c = self.project(h_v)
        return QuadraticGainObjective(
            self.model.z_pp, self.model.z_pa, np.outer(c, c.conj()), self.gram
        )

    def sum_objective(self, projections: np.ndarray) -> QuadraticGainObjective:
        """Objective summing gains over the rows of a (L, Q+1) projection stack."""
        c = np.atleast_2d(projections)
        return QuadraticGainObjective(
            self.model.z_pp, self.model.z_pa, c.T @ c.conj(), self.gram
        )

    def coder_gains(self, bits_matrix: np.ndarray, h_v: np.ndarray) -> np.ndarray:
        """Gains of each coder row for one channel realization (-inf infeasible)."""
        return self.objective(h_v).batch(bits_matrix)


def model_projection(model: PixelAntennaModel, h_v: np.ndarray, e_t: np.ndarray
                     ) -> np.ndarray:
    return model.e_oc.conj().T @ (h_v @ e_t)


def feasible_mask(model: PixelAntennaModel, bits_matrix: np.ndarray) -> np.ndarray:
    """True where a coder solves and radiates non-negligible energy."""
    gram = model.e_oc.conj().T @ model.e_oc
    currents, ok = batch_port_currents(
        model.z_pp, model.z_pa, np.ascontiguousarray(bits_matrix, dtype=np.uint8)
    )
    energy = _quadratic_form_rows(currents, gram)
    return ok & (energy > _DEN_FLOOR)
