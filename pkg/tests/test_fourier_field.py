"""Fields, transforms, snapshots and Sobolev norms."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlwlab.fourier_field import (
    VOLUME,
    AliasingError,
    CauchyPair,
    ComplexOutputError,
    FourierField,
    GridValues,
    analyze,
    apply_multiplier,
    bracket,
    default_resolution,
    half_lattice,
    neg_laplacian,
    pair_energy_norm,
    profile_pair,
    sobolev_norm,
    symmetrize,
    synthesize,
)

PI = np.pi


def random_field(M, seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((2 * M + 1,) * 3) + 1j * rng.standard_normal((2 * M + 1,) * 3)
    return FourierField(symmetrize(c))


def grid_axis(G):
    return 2 * PI * np.arange(G) / G


class TestConstruction:
    def test_cos_mode_synthesizes_exactly(self):
        u = FourierField.from_modes(1, cos={(1, 0, 0): 1.0})
        x = grid_axis(32)
        assert np.max(np.abs(synthesize(u, 32).values - np.cos(x)[:, None, None])) < 1e-14

    def test_sin_mode_and_negative_direction(self):
        u = FourierField.from_modes(2, sin={(0, -1, 2): 1.5})
        x = grid_axis(16)
        X1, X2, X3 = np.meshgrid(x, x, x, indexing="ij")
        assert np.allclose(synthesize(u, 16).values, 1.5 * np.sin(-X2 + 2 * X3), atol=1e-13)

    def test_constant(self):
        u = FourierField.constant(2.0, 3)
        assert np.allclose(synthesize(u, 8).values, 2.0)

    def test_non_hermitian_rejected(self):
        c = np.zeros((3, 3, 3), dtype=complex)
        c[2, 1, 1] = 1.0
        with pytest.raises(ComplexOutputError):
            FourierField(c)

    def test_bad_shape_rejected(self):
        with pytest.raises(ValueError):
            FourierField(np.zeros((3, 3, 4)))

    def test_coefficients_are_read_only(self):
        u = FourierField.zeros(2)
        with pytest.raises(ValueError):
            u.coeffs[0, 0, 0] = 1.0

    def test_real_basis_round_trip(self):
        u = random_field(3, 0)
        a0, reps, b, c = u.real_basis()
        v = FourierField.from_real_basis(3, a0, b, c)
        assert np.allclose(u.coeffs, v.coeffs, atol=1e-14)
        assert len(reps) == ((2 * 3 + 1) ** 3 - 1) // 2

    def test_with_cutoff_pads_and_truncates(self):
        u = random_field(2, 1)
        big = u.with_cutoff(4)
        assert big.cutoff == 4
        assert np.allclose(big.with_cutoff(2).coeffs, u.coeffs)


class TestHalfLattice:
    def test_prefix_property(self):
        small, _, _ = half_lattice(3)
        big, _, _ = half_lattice(6)
        assert np.array_equal(big[: len(small)], small)

    def test_representatives_cover_each_direction_once(self):
        reps, pos, neg = half_lattice(2)
        keys = {tuple(r) for r in reps} | {tuple(-r) for r in reps}
        assert len(keys) == 2 * len(reps) == 5**3 - 1
        assert not set(pos) & set(neg)


class TestTransforms:
    @given(M=st.integers(0, 5), seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_round_trip(self, M, seed):
        u = random_field(M, seed)
        G = default_resolution(M, oversample=1, minimum=4)
        back = analyze(synthesize(u, G), M)
        assert np.max(np.abs(back.coeffs - u.coeffs)) < 1e-12 * max(1.0, np.max(np.abs(u.coeffs)))

    def test_aliasing_detected(self):
        with pytest.raises(AliasingError):
            synthesize(random_field(8, 0), 16)
        with pytest.raises(AliasingError):
            analyze(GridValues(np.zeros((16, 16, 16))), 8)

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError):
            synthesize(random_field(2, 0), 12)

    def test_analysis_output_is_exactly_hermitian(self):
        u = random_field(4, 3)
        v = analyze(synthesize(u, 16), 4)
        w = v - u  # must not trip the Hermitian check on a tiny difference
        assert np.max(np.abs(w.coeffs)) < 1e-12

    def test_default_resolution(self):
        assert default_resolution(15) == 64
        assert default_resolution(31) == 128
        assert default_resolution(3) == 32


class TestNorms:
    def test_l2_of_cos(self):
        u = FourierField.from_modes(1, cos={(1, 0, 0): 1.0})
        assert sobolev_norm(u, 0) == pytest.approx(np.sqrt(4 * PI**3), rel=1e-14)
        assert sobolev_norm(u, 1) == pytest.approx(np.sqrt(8 * PI**3), rel=1e-14)

    def test_constant(self):
        assert sobolev_norm(FourierField.constant(2.0, 1), 0) == pytest.approx(2 * VOLUME**0.5)

    def test_monotone_in_s(self):
        u = random_field(3, 5)
        assert sobolev_norm(u, 0.3) <= sobolev_norm(u, 0.7)

    def test_pair_norm(self):
        u = FourierField.from_modes(1, cos={(1, 0, 0): 1.0})
        pair = CauchyPair(u, FourierField.zeros(1), 1.0)
        assert pair.norm() == pytest.approx(np.sqrt(8 * PI**3))
        assert pair_energy_norm(u, FourierField.zeros(1)) == pytest.approx(np.sqrt(8 * PI**3))


class TestMultipliers:
    def test_laplacian_of_cos(self):
        u = FourierField.from_modes(2, cos={(1, 1, 0): 1.0})
        assert apply_multiplier(u, neg_laplacian).allclose(2.0 * u)

    def test_bracket(self):
        u = FourierField.from_modes(2, cos={(2, 0, 0): 1.0})
        assert apply_multiplier(u, bracket(2.0)).allclose(5.0 * u)

    def test_odd_symbol_rejected(self):
        with pytest.raises(ComplexOutputError):
            apply_multiplier(random_field(2, 0), lambda n1, n2, n3: n1.astype(float))


class TestSnapshots:
    def test_round_trip_bytes(self, tmp_path):
        u = random_field(3, 7)
        path = tmp_path / "u.nlwf"
        u.save(path, {"seed": 5})
        v = FourierField.load(path)
        assert np.array_equal(u.coeffs, v.coeffs)
        assert FourierField.snapshot_meta(path.read_bytes())["seed"] == "5"

    def test_layout(self):
        u = FourierField.constant(1.5, 1)
        blob = u.to_bytes()
        header, body = blob.split(b"\n", 1)
        assert header == b"NLWFIELD v1 cutoff=1 endian=little"
        data = np.frombuffer(body, dtype="<f8")
        assert data.size == 2 * 27
        assert data[2 * 13] == 1.5  # centre of the lexicographic order

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            FourierField.from_bytes(b"hello\n")


class TestProfile:
    def test_profile_coefficients(self):
        pair = profile_pair(3, 0.5, delta=0.0, amplitude=2.0)
        a0, reps, b, c = pair.u0.real_basis()
        jb = np.sqrt(1 + np.sum(reps**2, axis=1))
        assert a0 == 0
        assert np.allclose(b, 2 * jb**-2.0)
        assert np.allclose(c, 2 * jb**-2.0)
        _, _, b1, _ = pair.u1.real_basis()
        assert np.allclose(b1, 2 * jb**-1.0)
