import numpy as np
import pytest

from pixelcode import SynthesisSpec, synthesize_model


@pytest.fixture(scope="session")
def model_q5():
    return synthesize_model(SynthesisSpec(q_switches=5, k_angles=4, seed=7))


@pytest.fixture(scope="session")
def model_q8():
    # prescribed 5-fold spectrum: EADoF 5 at the default threshold
    return synthesize_model(
        SynthesisSpec(
            q_switches=8, k_angles=6, singular_spectrum=(1.0,) * 5, seed=202
        )
    )


@pytest.fixture(scope="session")
def model_q10():
    return synthesize_model(SynthesisSpec(q_switches=10, k_angles=6, seed=31))


def random_model(seed, q=6, k=4, spectrum=None):
    return synthesize_model(
        SynthesisSpec(q_switches=q, k_angles=k, singular_spectrum=spectrum, seed=seed)
    )


def penalty_currents(model, bits, antenna_current=1.0, off_impedance=1e12):
    """Finite-load oracle: off switches as a huge series impedance."""
    z_load = np.diag(np.where(np.asarray(bits) == 1, off_impedance, 0.0))
    i_pixel = -np.linalg.solve(model.z_pp + z_load, model.z_pa) * antenna_current
    return np.concatenate(([antenna_current], i_pixel))
