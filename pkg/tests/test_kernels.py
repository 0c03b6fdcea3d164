import numpy as np
import pytest

from pixelcode._kernels import HAVE_NATIVE, backend_name, numpy_backend

from conftest import random_model

if HAVE_NATIVE:
    from pixelcode._kernels import _native


def _random_batch(seed, q, n):
    model = random_model(seed, q=q, k=3)
    bits = np.random.default_rng(seed + 1).integers(0, 2, size=(n, q), dtype=np.uint8)
    return model, bits


@pytest.mark.skipif(not HAVE_NATIVE, reason="compiled kernel not built")
@pytest.mark.parametrize("seed,q,n", [(0, 1, 8), (1, 5, 64), (2, 10, 256), (3, 16, 100)])
def test_native_matches_numpy_backend(seed, q, n):
    model, bits = _random_batch(seed, q, n)
    got, got_ok = _native.batch_port_currents(model.z_pp, model.z_pa, bits)
    want, want_ok = numpy_backend.batch_port_currents(model.z_pp, model.z_pa, bits)
    np.testing.assert_array_equal(got_ok, want_ok)
    scale = np.max(np.abs(want))
    np.testing.assert_allclose(got, want, atol=1e-12 * scale)


@pytest.mark.parametrize(
    "backend",
    [numpy_backend] + ([_native] if HAVE_NATIVE else []),
    ids=lambda b: b.__name__.rsplit(".", 1)[-1],
)
class TestBackendContract:
    def test_antenna_current_fixed_and_off_ports_zero(self, backend):
        model, bits = _random_batch(7, 6, 32)
        currents, ok = backend.batch_port_currents(model.z_pp, model.z_pa, bits)
        assert ok.all()
        np.testing.assert_array_equal(currents[:, 0], 1.0)
        off = bits.astype(bool)
        assert np.all(currents[:, 1:][off] == 0.0)

    def test_all_off_row_is_trivial(self, backend):
        model, _ = _random_batch(8, 4, 1)
        bits = np.ones((1, 4), dtype=np.uint8)
        currents, ok = backend.batch_port_currents(model.z_pp, model.z_pa, bits)
        assert ok[0]
        np.testing.assert_array_equal(currents[0], [1.0, 0, 0, 0, 0])

    def test_singular_subsystem_flagged(self, backend):
        z_pp = np.ones((2, 2), dtype=complex)  # rank 1
        z_pa = np.array([1.0, 1.0], dtype=complex)
        bits = np.array([[0, 0], [1, 0]], dtype=np.uint8)
        currents, ok = backend.batch_port_currents(z_pp, z_pa, bits)
        assert not ok[0]
        assert ok[1]
        np.testing.assert_allclose(currents[1], [1.0, 0.0, -1.0])

    def test_matches_scalar_reduced_solve(self, backend):
        model, bits = _random_batch(9, 8, 50)
        currents, ok = backend.batch_port_currents(model.z_pp, model.z_pa, bits)
        assert ok.all()
        for row, coder in zip(currents, bits):
            on = np.flatnonzero(coder == 0)
            expected = np.zeros(9, dtype=complex)
            expected[0] = 1.0
            if on.size:
                expected[on + 1] = np.linalg.solve(
                    model.z_pp[np.ix_(on, on)], -model.z_pa[on]
                )
            np.testing.assert_allclose(row, expected, atol=1e-12)


def test_backend_name_consistent():
    assert backend_name() in ("native", "numpy")
    assert (backend_name() == "native") == HAVE_NATIVE
