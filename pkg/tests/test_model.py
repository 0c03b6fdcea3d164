import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pixelcode import (
    PixelAntennaModel,
    SynthesisSpec,
    load_model,
    port_currents,
    radiation_pattern,
    save_model,
    synthesize_model,
    validate_model,
)
from pixelcode.analysis import pattern_spectrum
from pixelcode.errors import (
    DimensionMismatch,
    InvalidSpec,
    ParseError,
    SingularNetwork,
    ValidationFailed,
    ZeroPattern,
)

from conftest import penalty_currents, random_model


def eig2x2_symmetric(a, b, c):
    """Standalone eigenvalue oracle for [[a, b], [b, c]]."""
    mean = (a + c) / 2.0
    radius = np.sqrt(((a - c) / 2.0) ** 2 + b * b)
    return mean - radius, mean + radius


def make_model(z, e_oc, k):
    q = z.shape[0] - 1
    return PixelAntennaModel(q_switches=q, k_angles=k, z_matrix=z, e_oc=e_oc)


class TestValidateModel:
    def test_identity_is_valid(self):
        model = make_model(np.eye(2, dtype=complex), np.ones((2, 2), complex), 1)
        assert validate_model(model) == []

    def test_asymmetric_z_reports_reciprocity(self):
        z = np.array([[1.0, 2.0], [3.0, 1.0]], dtype=complex)
        model = make_model(z, np.ones((2, 2), complex), 1)
        report = validate_model(model)
        assert any("reciprocity" in line for line in report)

    def test_indefinite_re_z_reports_passivity(self):
        # oracle: eigenvalues of [[1, 2], [2, 1]] are 3 and -1
        low, high = eig2x2_symmetric(1.0, 2.0, 1.0)
        assert low == pytest.approx(-1.0)
        assert high == pytest.approx(3.0)
        z = np.array([[1.0, 2.0], [2.0, 1.0]], dtype=complex)
        model = make_model(z, np.ones((2, 2), complex), 1)
        report = validate_model(model)
        assert any("passivity" in line for line in report)

    def test_wrong_e_oc_shape_reported(self):
        model = make_model(np.eye(2, dtype=complex), np.ones((3, 2), complex), 1)
        assert any("e_oc shape" in line for line in validate_model(model))


class TestPortCurrents:
    def test_all_off_forces_zero_pixel_current(self):
        z = np.diag([1.0 + 0j, 1.0])
        model = make_model(z, np.eye(2, dtype=complex), 1)
        currents = port_currents(model, [1], antenna_current=1.0)
        np.testing.assert_array_equal(currents, [1.0, 0.0])

    def test_single_on_switch(self):
        z = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
        model = make_model(z, np.eye(2, dtype=complex), 1)
        currents = port_currents(model, [0], antenna_current=1.0)
        np.testing.assert_allclose(currents, [1.0, -1.0])

    def test_mixed_coder_matches_penalty_oracle(self):
        z = np.array(
            [[1.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]], dtype=complex
        )
        model = make_model(z, np.eye(3, dtype=complex)[:2], 1)
        bits = [0, 1]
        currents = port_currents(model, bits, antenna_current=1.0)
        np.testing.assert_allclose(currents, [1.0, -0.5, 0.0], atol=1e-12)
        oracle = penalty_currents(model, bits)
        np.testing.assert_allclose(currents, oracle, atol=1e-9)

    def test_wrong_length_raises(self, model_q5):
        with pytest.raises(DimensionMismatch):
            port_currents(model_q5, [0, 1])

    def test_non_binary_raises(self, model_q5):
        with pytest.raises(DimensionMismatch):
            port_currents(model_q5, [0, 1, 2, 0, 1])

    def test_singular_subsystem_raises(self):
        # two shorted ports with identical rows: singular 2x2 subsystem
        z = np.zeros((3, 3), dtype=complex)
        z[0, 0] = 1.0
        z[1:, 1:] = 1.0
        z[0, 1:] = z[1:, 0] = 0.5
        model = make_model(z, np.ones((2, 3), complex), 1)
        with pytest.raises(SingularNetwork):
            port_currents(model, [0, 0])

    def test_linear_in_antenna_current(self, model_q5):
        bits = [0, 1, 0, 0, 1]
        base = port_currents(model_q5, bits, antenna_current=1.0)
        scaled = port_currents(model_q5, bits, antenna_current=2.0 - 1.0j)
        np.testing.assert_allclose(scaled, base * (2.0 - 1.0j), rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(
        seed=st.integers(0, 2**32 - 1),
        q=st.integers(1, 10),
        coder_seed=st.integers(0, 2**32 - 1),
    )
    def test_open_short_limit_of_penalty_form(self, seed, q, coder_seed):
        model = random_model(seed, q=q, k=2)
        bits = np.random.default_rng(coder_seed).integers(0, 2, size=q, dtype=np.uint8)
        exact = port_currents(model, bits)
        approx = penalty_currents(model, bits)
        scale = max(np.max(np.abs(exact)), 1.0)
        assert np.max(np.abs(exact - approx)) <= 1e-6 * scale


class TestRadiationPattern:
    def test_all_off_returns_antenna_pattern(self, model_q5):
        bits = np.ones(5, dtype=np.uint8)
        np.testing.assert_array_equal(
            radiation_pattern(model_q5, bits), model_q5.e_oc[:, 0]
        )

    def test_normalized_has_unit_norm(self, model_q5):
        for bits in ([0, 1, 0, 1, 0], [1, 1, 0, 0, 1], [0] * 5):
            pattern = radiation_pattern(model_q5, bits, normalize=True)
            assert np.linalg.norm(pattern) == pytest.approx(1.0, abs=1e-12)

    def test_hand_checkable_superposition(self):
        z = np.array([[1.0, 1.0], [1.0, 1.0]], dtype=complex)
        model = make_model(z, np.eye(2, dtype=complex), 1)
        pattern = radiation_pattern(model, [0])
        np.testing.assert_allclose(pattern, [1.0, -1.0])
        # large-impedance oracle reproduces the same pattern
        oracle = model.e_oc @ penalty_currents(model, [0])
        np.testing.assert_allclose(pattern, oracle, atol=1e-9)

    def test_zero_pattern_raises_when_normalizing(self):
        z = np.eye(2, dtype=complex)
        model = make_model(z, np.zeros((2, 2), complex), 1)
        with pytest.raises(ZeroPattern):
            radiation_pattern(model, [1], normalize=True)

    def test_unnormalized_linear_in_current(self, model_q5):
        bits = [0, 0, 1, 0, 1]
        currents = port_currents(model_q5, bits, antenna_current=3.0)
        np.testing.assert_allclose(
            model_q5.e_oc @ currents, 3.0 * radiation_pattern(model_q5, bits), rtol=1e-12
        )


class TestSynthesizeModel:
    def test_deterministic_in_seed(self):
        spec = SynthesisSpec(q_switches=6, k_angles=5, seed=99)
        a, b = synthesize_model(spec), synthesize_model(spec)
        assert np.array_equal(a.z_matrix, b.z_matrix)
        assert np.array_equal(a.e_oc, b.e_oc)

    def test_prescribed_spectrum_is_exact(self):
        spectrum = (1.0, 1.0, 0.0)
        model = synthesize_model(
            SynthesisSpec(q_switches=4, k_angles=3, singular_spectrum=spectrum, seed=1)
        )
        s = np.linalg.svd(model.e_oc, compute_uv=False)
        np.testing.assert_allclose(s[:3], spectrum, atol=1e-9)
        np.testing.assert_allclose(s[3:], 0.0, atol=1e-9)

    @pytest.mark.parametrize("seed", [0, 1, 17, 123456])
    def test_always_valid(self, seed):
        model = synthesize_model(SynthesisSpec(q_switches=7, k_angles=3, seed=seed))
        assert validate_model(model) == []

    @pytest.mark.parametrize(
        "spectrum",
        [(1.0, 2.0), (-1.0,), (np.nan,), tuple(range(20))],
    )
    def test_malformed_spectrum_rejected(self, spectrum):
        with pytest.raises(InvalidSpec):
            synthesize_model(
                SynthesisSpec(
                    q_switches=4, k_angles=3, singular_spectrum=spectrum, seed=0
                )
            )


class TestModelIO:
    def test_round_trip_identity(self, model_q5):
        assert load_model(save_model(model_q5)) == model_q5

    def test_double_round_trip_bytes_identical(self, model_q5):
        data = save_model(model_q5)
        assert save_model(load_model(data)) == data

    def test_wrong_e_oc_count_names_field(self, model_q5):
        doc = json.loads(save_model(model_q5))
        doc["e_oc_re"] = doc["e_oc_re"][: 8 * 5]  # pretend 5 columns
        with pytest.raises(ParseError, match="e_oc columns"):
            load_model(json.dumps(doc).encode())

    def test_nan_impedance_rejected(self, model_q5):
        doc = json.loads(save_model(model_q5))
        doc["z_re"][3] = float("nan")
        with pytest.raises(ParseError):
            load_model(json.dumps(doc, allow_nan=True).encode())

    def test_invalid_model_rejected_with_report(self, model_q5):
        doc = json.loads(save_model(model_q5))
        doc["z_re"][1] += 1.0  # break reciprocity
        with pytest.raises(ValidationFailed) as excinfo:
            load_model(json.dumps(doc).encode())
        assert any("reciprocity" in line for line in excinfo.value.report)

    def test_garbage_rejected(self):
        with pytest.raises(ParseError):
            load_model(b"not json at all")
        with pytest.raises(ParseError):
            load_model(b"[1, 2, 3]")

    def test_missing_field_named(self, model_q5):
        doc = json.loads(save_model(model_q5))
        del doc["k_angles"]
        with pytest.raises(ParseError, match="k_angles"):
            load_model(json.dumps(doc).encode())


def test_spectrum_fixture_matches_eadof_intent(model_q8):
    s, cumulative = pattern_spectrum(model_q8)
    assert np.sum(s > 1e-9) == 5
    assert cumulative[4] == pytest.approx(1.0)
