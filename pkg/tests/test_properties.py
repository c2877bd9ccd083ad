"""Property-based checks of the algebraic identities."""

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from humeyer.basis import BasisSpec, Interval
from humeyer.combinatorics import PairPartition, adjacent_to_sr, all_pair_partitions, enum_A, sr_to_partition
from humeyer.hu_meyer import convert_round_trip, hu_meyer_forward, hu_meyer_round_trip, stratonovich_spectral
from humeyer.kernels import VolterraKernel, WeightSpec, coeff_tensor, fourier_coeff, kernel_l2_norm_sq
from humeyer.traces import TraceTensor, partial_trace_array, partial_trace_direct, trace_l2_distance
from humeyer.wiener import sample_noise

exponents = st.integers(0, 2)
bases = st.sampled_from([BasisSpec.legendre(), BasisSpec.trigonometric(), BasisSpec.legendre(-0.5, 1.5)])


@st.composite
def kernels_and_partitions(draw, kmax=4):
    k = draw(st.integers(2, kmax))
    exps = tuple(draw(exponents) for _ in range(k))
    part = draw(st.sampled_from(all_pair_partitions(k)))
    return exps, part


@given(kernels_and_partitions(), bases, st.integers(0, 3))
def test_partial_trace_routes_agree(kp, basis, p):
    exps, part = kp
    kern = VolterraKernel(WeightSpec(exps), basis.interval)
    direct = partial_trace_direct(basis, kern, part, p)
    contracted = partial_trace_array(coeff_tensor(basis, kern, p).data, part)
    np.testing.assert_allclose(direct, contracted, atol=1e-12)


@given(exponents, exponents, st.integers(0, 5), st.integers(0, 5), bases)
def test_swap_identity_k2(l1, l2, j1, j2, basis):
    # C_{j2 j1}(psi_1, psi_2) + C_{j1 j2}(psi_2, psi_1) splits into single integrals
    I = basis.interval
    fwd = fourier_coeff(basis, VolterraKernel(WeightSpec((l1, l2)), I), (j1, j2))
    rev = fourier_coeff(basis, VolterraKernel(WeightSpec((l2, l1)), I), (j2, j1))
    a = fourier_coeff(basis, VolterraKernel(WeightSpec((l1,)), I), (j1,))
    b = fourier_coeff(basis, VolterraKernel(WeightSpec((l2,)), I), (j2,))
    assert abs(fwd + rev - a * b) < 1e-12


@given(st.lists(exponents, min_size=1, max_size=3), st.sampled_from([BasisSpec.legendre(), BasisSpec.trigonometric()]))
def test_parseval_partial_sums_bounded_and_monotone(exps, basis):
    kern = VolterraKernel(WeightSpec(tuple(exps)))
    data = coeff_tensor(basis, kern, 5).data
    sums = [np.sum(data[(slice(0, p + 1),) * data.ndim] ** 2) for p in range(6)]
    assert all(b >= a - 1e-15 for a, b in zip(sums, sums[1:]))
    assert sums[-1] <= kernel_l2_norm_sq(kern) + 1e-12


@given(st.integers(0, 10_000), st.integers(0, 3))
def test_trace_distance_triangle(seed, order):
    rng = np.random.default_rng(seed)
    basis = BasisSpec.legendre()
    free = tuple(range(1, order + 1))
    a, b, c = (TraceTensor(basis, 2, rng.standard_normal((3,) * order), free) for _ in range(3))
    assert trace_l2_distance(a, a) == 0.0
    assert trace_l2_distance(a, b) == trace_l2_distance(b, a)
    assert trace_l2_distance(a, c) <= trace_l2_distance(a, b) + trace_l2_distance(b, c) + 1e-12


@st.composite
def expansion_cases(draw, kmax=4, pmax=3, m=3):
    k = draw(st.integers(1, kmax))
    exps = tuple(draw(exponents) for _ in range(k))
    channels = tuple(draw(st.integers(0, m)) for _ in range(k))
    p = draw(st.integers(0, pmax))
    seed = draw(st.integers(0, 2**31))
    return exps, channels, p, seed


@given(expansion_cases(), bases)
def test_forward_identity(case, basis):
    exps, channels, p, seed = case
    T = coeff_tensor(basis, VolterraKernel(WeightSpec(exps), basis.interval), p)
    noise = sample_noise(3, p, seed, basis, size=3)
    total = hu_meyer_forward(T, channels, noise).total
    want = stratonovich_spectral(T, channels, noise)
    np.testing.assert_allclose(total, want, rtol=1e-10, atol=1e-10 * max(1.0, np.max(np.abs(want))))


@given(expansion_cases(), bases)
def test_hu_meyer_round_trip(case, basis):
    exps, channels, p, seed = case
    T = coeff_tensor(basis, VolterraKernel(WeightSpec(exps), basis.interval), p)
    base, rec = hu_meyer_round_trip(T, channels, sample_noise(3, p, seed, basis, size=3))
    np.testing.assert_allclose(rec, base, atol=1e-10 * max(1.0, np.max(np.abs(base))))


@given(expansion_cases(kmax=3, pmax=4), st.sampled_from([BasisSpec.legendre(), BasisSpec.legendre(1.0, 3.0)]))
def test_conversion_round_trip(case, basis):
    exps, channels, p, seed = case
    T = coeff_tensor(basis, VolterraKernel(WeightSpec(exps), basis.interval), p)
    ito, rec = convert_round_trip(T, channels, sample_noise(3, p, seed, basis, size=3))
    np.testing.assert_allclose(rec, ito, atol=1e-10 * max(1.0, np.max(np.abs(ito))))


@given(st.integers(2, 8).flatmap(lambda k: st.tuples(st.just(k), st.permutations(range(1, k + 1)))))
def test_canonicalization_idempotent(case):
    k, perm = case
    r = k // 2
    # pair consecutive entries of a random permutation, listed in scrambled orientation
    pairs = [(perm[2 * i + 1], perm[2 * i]) for i in range(r)][::-1]
    part = PairPartition.from_pairs(k, pairs)
    assert part.canonical() == part and part.canonical().canonical() == part
    assert all(a < b for a, b in part.pairs)
    assert list(part.pairs) == sorted(part.pairs)
    assert sorted(part.free + tuple(g for pair in part.pairs for g in pair)) == list(range(1, k + 1))


@given(st.integers(2, 8).flatmap(lambda k: st.tuples(st.just(k), st.integers(1, k // 2))))
def test_adjacent_bijection(case):
    k, r = case
    for sr in enum_A(k, r):
        assert adjacent_to_sr(sr_to_partition(k, sr)) == sr


@given(st.floats(-2, 2), st.floats(0.1, 3), st.integers(0, 4))
def test_interval_shift_scales_coefficients(t, length, j):
    # C for weights (0, 0) on [t, t + D] equals D times the unit-interval value
    unit = fourier_coeff(BasisSpec.legendre(), VolterraKernel(WeightSpec((0, 0))), (j, 0))
    basis = BasisSpec.legendre(t, t + length)
    shifted = fourier_coeff(basis, VolterraKernel(WeightSpec((0, 0)), Interval(t, t + length)), (j, 0))
    assert abs(shifted - length * unit) < 1e-12 * max(1.0, length)
