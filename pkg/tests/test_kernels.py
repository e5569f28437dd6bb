import numpy as np
import pytest

from slabfft import (
    Direction,
    LayoutError,
    SizeError,
    ConsistencyError,
    TwoLevelStride,
    fft2d_c2r_plane,
    fft2d_r2c_plane,
    fft_c2c_inplace,
    fft_c2c_strided,
    fft_c2r_1d,
    fft_r2c_1d,
    plan_twiddles,
)
from slabfft.oracle import dft1d_naive

from helpers import naive_dft2_r2c


def c2c(values, direction=Direction.FORWARD):
    buf = np.asarray(values, dtype=np.complex128)
    fft_c2c_inplace(buf, direction, plan_twiddles(buf.size))
    return buf


class TestTwiddles:
    def test_degenerate_n1(self):
        assert plan_twiddles(1).factors.size == 0

    def test_n4(self):
        np.testing.assert_allclose(plan_twiddles(4).factors, [1.0 + 0.0j, -1.0j], atol=1e-15)

    def test_n8_analytic(self):
        got = plan_twiddles(8).factors[1]
        want = np.sqrt(2.0) / 2.0 * (1.0 - 1.0j)
        assert abs(got - want) < 1e-15

    @pytest.mark.parametrize("n", [2, 4, 8, 64, 256])
    def test_unit_magnitude(self, n):
        tab = plan_twiddles(n)
        assert tab.factors[0] == 1.0 + 0.0j
        assert np.max(np.abs(np.abs(tab.factors) - 1.0)) <= 1e-15

    @pytest.mark.parametrize("n", [0, 3, 12, -4])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(SizeError):
            plan_twiddles(n)


class TestC2C:
    def test_delta_to_constant(self):
        np.testing.assert_allclose(c2c([1, 0, 0, 0]), [1, 1, 1, 1], atol=0)

    def test_constant_to_delta(self):
        np.testing.assert_allclose(c2c([1, 1, 1, 1]), [4, 0, 0, 0], atol=1e-15)

    def test_shifted_delta(self):
        # independent check against direct summation, plus the analytic bins
        x = np.array([0, 1, 0, 0], dtype=np.complex128)
        want = dft1d_naive(x)
        got = c2c(x)
        np.testing.assert_allclose(got, want, atol=1e-15)
        np.testing.assert_allclose(got, [1, -1j, -1, 1j], atol=1e-15)

    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    def test_matches_naive_summation(self, n):
        rng = np.random.default_rng(n)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        want = dft1d_naive(x)
        got = c2c(x.copy())
        assert np.max(np.abs(got - want)) <= 1e-12 * n

    @pytest.mark.parametrize("n", [1, 2, 8, 64])
    def test_inverse_is_unnormalized(self, n):
        rng = np.random.default_rng(n + 1)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        back = c2c(c2c(x.copy()), Direction.INVERSE)
        np.testing.assert_allclose(back, n * x, atol=1e-12 * n * np.max(np.abs(x)))

    def test_length_mismatch(self):
        with pytest.raises(SizeError):
            fft_c2c_inplace(np.zeros(8, dtype=np.complex128), Direction.FORWARD, plan_twiddles(4))

    @pytest.mark.parametrize("n", [4, 8, 64])
    def test_linearity(self, n):
        rng = np.random.default_rng(n + 2)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a, b = 0.7 - 0.2j, -1.3 + 0.5j
        lhs = c2c(a * x + b * y)
        rhs = a * c2c(x.copy()) + b * c2c(y.copy())
        scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)))
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * n * scale

    @pytest.mark.parametrize("n", [4, 8, 64, 256])
    def test_parseval(self, n):
        rng = np.random.default_rng(n + 3)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        spectrum_energy = float(np.sum(np.abs(c2c(x.copy())) ** 2))
        signal_energy = float(n * np.sum(np.abs(x) ** 2))
        assert abs(spectrum_energy - signal_energy) <= 1e-10 * signal_energy

    def test_works_on_noncontiguous_view(self):
        buf = np.zeros(8, dtype=np.complex128)
        view = buf[::2]
        view_in = np.array([1, 1, 1, 1], dtype=np.complex128)
        view[:] = view_in
        fft_c2c_inplace(view, Direction.FORWARD, plan_twiddles(4))
        np.testing.assert_allclose(view, [4, 0, 0, 0], atol=1e-15)
        np.testing.assert_array_equal(buf[1::2], 0)


class TestC2CStrided:
    def test_identity_stride(self):
        buf = np.array([1, 0, 0, 0], dtype=np.complex128)
        layout = TwoLevelStride(inner_count=4, inner_stride=1, block_count=1, block_stride=4)
        fft_c2c_strided(buf, layout, Direction.FORWARD, plan_twiddles(4))
        np.testing.assert_allclose(buf, [1, 1, 1, 1], atol=0)

    def test_interleaved_leaves_gaps_untouched(self):
        sentinel = 99.0 + 99.0j
        buf = np.array([1, sentinel, 1, sentinel, 1, sentinel, 1, sentinel], dtype=np.complex128)
        layout = TwoLevelStride(inner_count=4, inner_stride=2, block_count=1, block_stride=8)
        fft_c2c_strided(buf, layout, Direction.FORWARD, plan_twiddles(4))
        np.testing.assert_allclose(buf[0::2], [4, 0, 0, 0], atol=1e-15)
        np.testing.assert_array_equal(buf[1::2], sentinel)

    def test_two_level_case(self):
        # logical vector at offsets {0, 4, 2, 6} of an 8-slot buffer
        layout = TwoLevelStride(inner_count=2, inner_stride=4, block_count=2, block_stride=2)
        np.testing.assert_array_equal(layout.offsets, [0, 4, 2, 6])
        buf = np.zeros(8, dtype=np.complex128)
        logical = np.array([1, 0, 0, 0], dtype=np.complex128)
        buf[layout.offsets] = logical
        fft_c2c_strided(buf, layout, Direction.FORWARD, plan_twiddles(4))
        np.testing.assert_allclose(buf[layout.offsets], dft1d_naive(logical), atol=1e-15)

    @pytest.mark.parametrize(
        "layout,buflen",
        [
            (TwoLevelStride(4, 3, 2, 12), 24),
            (TwoLevelStride(2, 8, 4, 2), 17),
            (TwoLevelStride(8, 1, 1, 8, base_offset=5), 13),
        ],
    )
    def test_bitwise_equals_gather_fft_scatter(self, layout, buflen):
        rng = np.random.default_rng(layout.inner_stride)
        buf = rng.standard_normal(buflen) + 1j * rng.standard_normal(buflen)
        tw = plan_twiddles(layout.length)
        ref = buf.copy()
        gathered = ref[layout.offsets].copy()
        fft_c2c_inplace(gathered, Direction.FORWARD, tw)
        ref[layout.offsets] = gathered
        fft_c2c_strided(buf, layout, Direction.FORWARD, tw)
        np.testing.assert_array_equal(buf, ref)

    def test_overlapping_offsets_rejected(self):
        layout = TwoLevelStride(inner_count=2, inner_stride=2, block_count=2, block_stride=2)
        buf = np.zeros(8, dtype=np.complex128)
        with pytest.raises(LayoutError):
            fft_c2c_strided(buf, layout, Direction.FORWARD, plan_twiddles(4))

    def test_out_of_range_rejected(self):
        layout = TwoLevelStride(inner_count=4, inner_stride=3, block_count=1, block_stride=1)
        with pytest.raises(LayoutError):
            fft_c2c_strided(np.zeros(8, dtype=np.complex128), layout,
                            Direction.FORWARD, plan_twiddles(4))

    def test_length_mismatch_rejected(self):
        layout = TwoLevelStride(inner_count=2, inner_stride=1, block_count=1, block_stride=2)
        with pytest.raises(SizeError):
            fft_c2c_strided(np.zeros(8, dtype=np.complex128), layout,
                            Direction.FORWARD, plan_twiddles(4))


class TestRealTransforms:
    def test_r2c_constant(self):
        got = fft_r2c_1d(np.array([1.0, 1.0, 1.0, 1.0]), plan_twiddles(4))
        np.testing.assert_allclose(got, [4, 0, 0], atol=1e-15)

    def test_r2c_delta(self):
        got = fft_r2c_1d(np.array([1.0, 0.0, 0.0, 0.0]), plan_twiddles(4))
        np.testing.assert_allclose(got, [1, 1, 1], atol=0)

    def test_r2c_alternating_vs_naive(self):
        x = np.array([0.0, 1.0, 0.0, 1.0])
        want = dft1d_naive(x)[:3]
        got = fft_r2c_1d(x, plan_twiddles(4))
        np.testing.assert_allclose(got, want, atol=1e-15)
        np.testing.assert_allclose(got, [2, 0, -2], atol=1e-15)

    @pytest.mark.parametrize("n", [2, 8, 32])
    def test_r2c_edge_bins_real(self, n):
        rng = np.random.default_rng(n)
        x = rng.standard_normal(n)
        got = fft_r2c_1d(x, plan_twiddles(n))
        tol = 1e-12 * n * np.max(np.abs(x))
        assert abs(got[0].imag) <= tol and abs(got[n // 2].imag) <= tol

    @pytest.mark.parametrize("n", [4, 8, 64])
    def test_hermitian_symmetry_and_embedding(self, n):
        rng = np.random.default_rng(n + 5)
        x = rng.standard_normal(n)
        full = c2c(x.astype(np.complex128))
        assert np.max(np.abs(full[1:] - full[1:][::-1].conj())) <= 1e-12 * n * np.max(np.abs(full))
        half = fft_r2c_1d(x, plan_twiddles(n))
        assert np.max(np.abs(half - full[: n // 2 + 1])) <= 1e-12

    def test_r2c_rejects_n1(self):
        with pytest.raises(SizeError):
            fft_r2c_1d(np.ones(1), plan_twiddles(1))

    def test_c2r_constant(self):
        got = fft_c2r_1d(np.array([4.0, 0.0, 0.0], dtype=np.complex128), 4, plan_twiddles(4))
        np.testing.assert_allclose(got, [4, 4, 4, 4], atol=1e-15)

    def test_c2r_delta(self):
        got = fft_c2r_1d(np.array([1.0, 1.0, 1.0], dtype=np.complex128), 4, plan_twiddles(4))
        np.testing.assert_allclose(got, [4, 0, 0, 0], atol=1e-15)

    def test_c2r_roundtrip_unnormalized(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal(8)
        tw = plan_twiddles(8)
        back = fft_c2r_1d(fft_r2c_1d(x, tw), 8, tw)
        np.testing.assert_allclose(back, 8 * x, atol=1e-12 * 8 * np.max(np.abs(x)))

    def test_c2r_rejects_corrupted_spectrum(self):
        bad = np.array([1.0 + 1.0j, 0.5, 0.25], dtype=np.complex128)
        with pytest.raises(ConsistencyError):
            fft_c2r_1d(bad, 4, plan_twiddles(4))


class TestPlaneTransforms:
    def test_constant_plane(self):
        got = fft2d_r2c_plane(np.ones((2, 2)))
        np.testing.assert_allclose(got, [[4, 0], [0, 0]], atol=1e-15)

    def test_delta_plane(self):
        got = fft2d_r2c_plane(np.array([[1.0, 0.0], [0.0, 0.0]]))
        np.testing.assert_allclose(got, np.ones((2, 2)), atol=0)

    def test_random_plane_vs_naive(self):
        rng = np.random.default_rng(44)
        plane = rng.standard_normal((4, 4))
        got = fft2d_r2c_plane(plane)
        assert np.max(np.abs(got - naive_dft2_r2c(plane))) <= 1e-12

    def test_c2r_constant(self):
        got = fft2d_c2r_plane(np.array([[4.0, 0.0], [0.0, 0.0]], dtype=np.complex128), 2)
        np.testing.assert_allclose(got, 4 * np.ones((2, 2)), atol=1e-15)

    def test_c2r_delta(self):
        got = fft2d_c2r_plane(np.ones((2, 2), dtype=np.complex128), 2)
        np.testing.assert_allclose(got, [[4, 0], [0, 0]], atol=1e-15)

    def test_plane_roundtrip(self):
        rng = np.random.default_rng(45)
        plane = rng.standard_normal((4, 4))
        back = fft2d_c2r_plane(fft2d_r2c_plane(plane), 4)
        np.testing.assert_allclose(back, 16 * plane, rtol=1e-12, atol=1e-12)

    def test_rejects_odd_fast_axis(self):
        with pytest.raises(SizeError):
            fft2d_r2c_plane(np.ones((2, 3)))
