"""Beamspace fading channels projected onto radiation patterns.

The propagation environment is a 2K x 2K virtual channel matrix of
per-angle-pair path gains (theta/phi polarization blocks) with i.i.d.
CN(0,1) entries under rich Rayleigh scattering. SISO and MIMO channels are
obtained by sandwiching it between normalized receive and transmit
patterns.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, ZeroPattern
from .model import PixelAntennaModel, radiation_pattern


def sample_virtual_channel(k_angles: int, rng: np.random.Generator) -> np.ndarray:
    """One Rayleigh realization: 2K x 2K i.i.d. CN(0,1) entries."""
    if k_angles < 1:
        raise DimensionMismatch("k_angles must be >= 1")
    n = 2 * k_angles
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)


def isotropic_pattern(k_angles: int) -> np.ndarray:
    """Unit-norm constant-magnitude theta-polarized transmit pattern."""
    if k_angles < 1:
        raise DimensionMismatch("k_angles must be >= 1")
    pattern = np.zeros(2 * k_angles, dtype=np.complex128)
    pattern[:k_angles] = 1.0 / np.sqrt(k_angles)
    return pattern


def siso_channel(e_r: np.ndarray, h_v: np.ndarray, e_t: np.ndarray) -> complex:
    """Scalar beamspace channel e_r^H H_V e_t (patterns assumed unit-norm)."""
    e_r = np.asarray(e_r)
    e_t = np.asarray(e_t)
    h_v = np.asarray(h_v)
    if h_v.ndim != 2 or h_v.shape[0] != h_v.shape[1]:
        raise DimensionMismatch(f"virtual channel must be square, got {h_v.shape}")
    if e_r.shape != (h_v.shape[0],) or e_t.shape != (h_v.shape[1],):
        raise DimensionMismatch(
            f"pattern lengths {e_r.shape}, {e_t.shape} do not match channel {h_v.shape}"
        )
    return complex(np.vdot(e_r, h_v @ e_t))


def mimo_channel(
    model_t: PixelAntennaModel,
    coders_t,
    model_r: PixelAntennaModel,
    coders_r,
    h_v: np.ndarray,
) -> np.ndarray:
    """N_R x N_T beamspace channel between coded pixel antenna arrays."""
    h_v = np.asarray(h_v)
    if h_v.shape != (2 * model_r.k_angles, 2 * model_t.k_angles):
        raise DimensionMismatch(
            f"virtual channel {h_v.shape} does not match models "
            f"({2 * model_r.k_angles} x {2 * model_t.k_angles})"
        )
    e_t = _pattern_columns(model_t, coders_t, "transmit")
    e_r = _pattern_columns(model_r, coders_r, "receive")
    return e_r.conj().T @ h_v @ e_t


def _pattern_columns(model: PixelAntennaModel, coders, side: str) -> np.ndarray:
    columns = np.empty((2 * model.k_angles, len(coders)), dtype=np.complex128)
    for n, coder in enumerate(coders):
        try:
            columns[:, n] = radiation_pattern(model, coder, normalize=True)
        except ZeroPattern as exc:
            raise ZeroPattern(
                f"{side} coder {n} radiates nothing", side=side, index=n
            ) from exc
    return columns
