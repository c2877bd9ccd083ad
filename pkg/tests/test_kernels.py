import itertools
import json
import math

import numpy as np
import pytest
import sympy as sp

from humeyer.basis import BasisSpec, Interval
from humeyer.combinatorics import PairPartition
from humeyer.errors import CapacityError, ContractError, DomainError
from humeyer.kernels import (
    CoeffTensor,
    GeneralKernel,
    VolterraKernel,
    WeightSpec,
    coeff_tensor,
    collapsed_coeff,
    collapsed_tensor,
    fourier_coeff,
    general_coeff,
    general_coeff_tensor,
    kernel_eval,
    kernel_l2_norm_sq,
)
from oracles import sym_coeff

LEG = BasisSpec.legendre()
TRIG = BasisSpec.trigonometric()


def volterra(*exps, interval=Interval()):
    return VolterraKernel(WeightSpec(tuple(exps)), interval)


def test_kernel_eval_examples():
    assert kernel_eval(volterra(0, 0), [0.2, 0.7]) == 1.0
    assert kernel_eval(volterra(0, 0), [0.4, 0.4]) == 0.0
    assert kernel_eval(volterra(0, 0), [0.7, 0.2]) == 0.0
    assert kernel_eval(volterra(1, 0), [0.25, 0.5]) == pytest.approx(0.25)


def test_kernel_eval_outside():
    with pytest.raises(DomainError):
        kernel_eval(volterra(0, 0), [0.2, 1.2])


def test_weight_spec_rejects_negative():
    with pytest.raises(DomainError):
        WeightSpec((0, -1))


def test_coefficient_literals():
    assert fourier_coeff(LEG, volterra(0), [0]) == pytest.approx(1.0)
    assert fourier_coeff(LEG, volterra(0, 0), [0, 0]) == pytest.approx(0.5)
    # C_10 (j_1 = 0, j_2 = 1) and C_01
    assert fourier_coeff(LEG, volterra(0, 0), [0, 1]) == pytest.approx(1 / (2 * math.sqrt(3)))
    assert fourier_coeff(LEG, volterra(0, 0), [1, 0]) == pytest.approx(-1 / (2 * math.sqrt(3)))
    for j in range(1, 6):
        assert fourier_coeff(LEG, volterra(0, 0), [j, j]) == pytest.approx(0.0, abs=1e-14)


def test_tensor_examples():
    C = coeff_tensor(LEG, volterra(0, 0), 2)
    s = 1 / (2 * math.sqrt(3))
    assert C[0, 0] == pytest.approx(0.5)
    assert C[0, 1] == pytest.approx(s) and C[1, 0] == pytest.approx(-s)
    assert C[1, 1] == pytest.approx(0, abs=1e-14) and C[2, 2] == pytest.approx(0, abs=1e-14)
    assert np.allclose(coeff_tensor(LEG, volterra(0), 3).data, [1, 0, 0, 0], atol=1e-15)
    assert coeff_tensor(LEG, volterra(0, 0, 0), 0).data.item() == pytest.approx(1 / 6)


@pytest.mark.parametrize(
    "exps,jvec",
    [((0, 0), (2, 3)), ((1, 0), (1, 2)), ((2, 1), (3, 0)), ((0, 1, 0), (1, 0, 2)), ((1, 0, 2), (2, 1, 1)), ((0, 0, 0, 1), (1, 2, 0, 1))],
)
def test_legendre_against_symbolic(exps, jvec):
    ref = float(sym_coeff(jvec, exps))
    assert fourier_coeff(LEG, volterra(*exps), jvec) == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize("exps,jvec", [((0, 0), (1, 2)), ((0, 0), (3, 3)), ((1, 0), (2, 1)), ((0, 0, 0), (1, 2, 0))])
def test_trig_against_symbolic(exps, jvec):
    ref = float(sym_coeff(jvec, exps, kind="trigonometric"))
    assert fourier_coeff(TRIG, volterra(*exps), jvec) == pytest.approx(ref, abs=1e-12)


def test_symbolic_scaling_with_interval():
    interval = Interval(1.0, 3.0)
    D = sp.Integer(2)
    ref = float(sym_coeff((1, 0, 2), (1, 0, 2), D=D))
    basis = BasisSpec("legendre", interval)
    assert fourier_coeff(basis, volterra(1, 0, 2, interval=interval), (1, 0, 2)) == pytest.approx(ref, abs=1e-12)


def test_fourier_coeff_matches_tensor_entry():
    kern = volterra(1, 2, 0)
    C = coeff_tensor(LEG, kern, 3)
    for jvec in itertools.product(range(4), repeat=3):
        assert fourier_coeff(LEG, kern, jvec) == pytest.approx(C[jvec], abs=1e-14)


@pytest.mark.parametrize("exps", [(0, 0), (2, 1), (1, 0, 3), (0, 2, 1, 4), (4, 4, 4, 4)])
def test_exact_and_quadrature_paths_agree(exps):
    kern = volterra(*exps)
    exact = coeff_tensor(LEG, kern, 6).data
    quad = coeff_tensor(LEG, kern, 6, exact=False).data
    assert np.max(np.abs(exact - quad)) < 1e-10


def test_symmetry_identity():
    for exps in [(0, 0), (2, 2), (1, 1)]:
        kern = volterra(*exps)
        for basis in (LEG, TRIG):
            C = coeff_tensor(basis, kern, 8).data
            # int psi phi_j by projecting the k=1 kernel
            f = coeff_tensor(basis, volterra(exps[0]), 8).data
            assert np.max(np.abs(C + C.T - np.outer(f, f))) < 1e-12


def test_parseval_monotone_and_bounded():
    C = coeff_tensor(LEG, volterra(0, 0), 20).data
    sums = [np.sum(C[: p + 1, : p + 1] ** 2) for p in range(21)]
    assert np.all(np.diff(sums) >= -1e-15)
    assert sums[-1] <= 0.5 + 1e-14
    assert kernel_l2_norm_sq(volterra(0, 0)) == pytest.approx(0.5)


def test_kernel_l2_norm_weighted():
    # int_{u1<u2} u1^2 u2^4 = 1/(3*8)
    assert kernel_l2_norm_sq(volterra(1, 2)) == pytest.approx(1 / 24)


def test_capacity_cap():
    with pytest.raises(CapacityError):
        coeff_tensor(LEG, volterra(0, 0, 0), 300)
    with pytest.raises(CapacityError):
        coeff_tensor(LEG, volterra(0, 0), 10, max_entries=100)


def test_bit_identical_runs():
    a = coeff_tensor(TRIG, volterra(1, 0, 2), 5).data
    b = coeff_tensor(TRIG, volterra(1, 0, 2), 5).data
    assert a.tobytes() == b.tobytes()


def test_truncate_and_flat_layout():
    C = coeff_tensor(LEG, volterra(0, 1), 3)
    T = C.truncate(1)
    assert np.array_equal(T.data, C.data[:2, :2])
    flat = C.flat()
    # j_1 fastest: second entry is (j_1, j_2) = (1, 0)
    assert flat[1] == C[1, 0] and flat[4] == C[0, 1]
    with pytest.raises(ContractError):
        T.truncate(2)


def test_json_round_trip():
    C = coeff_tensor(LEG, volterra(1, 0), 3)
    d = json.loads(C.to_json())
    assert d["layout"] == "j1-fastest" and d["weights"] == [1, 0] and d["p"] == 3
    back = CoeffTensor.from_dict(d)
    assert np.array_equal(back.data, C.data)


def test_csv_rows():
    rows = coeff_tensor(LEG, volterra(0, 0), 1).to_csv().strip().splitlines()
    assert rows[0] == "j1,j2,value"
    assert rows[1].startswith("0,0,0.5") and len(rows) == 5


def test_collapsed_examples():
    assert collapsed_coeff(LEG, volterra(0, 0), PairPartition.from_pairs(2, [(1, 2)])) == pytest.approx(1.0)
    assert collapsed_coeff(LEG, volterra(0, 0, 0), PairPartition.from_pairs(3, [(1, 2)]), (0,)) == pytest.approx(0.5)
    assert collapsed_coeff(LEG, volterra(0, 0, 0, 0), PairPartition.from_pairs(4, [(1, 2), (3, 4)])) == pytest.approx(0.5)


def test_collapsed_nonadjacent_rejected():
    with pytest.raises(ContractError):
        collapsed_tensor(LEG, volterra(0, 0, 0), PairPartition.from_pairs(3, [(1, 3)]), 2)


def test_collapsed_empty_partition_is_fourier():
    kern = volterra(1, 0, 2)
    part = PairPartition.from_pairs(3, [])
    assert np.allclose(collapsed_tensor(LEG, kern, part, 3), coeff_tensor(LEG, kern, 3).data, atol=1e-15)


def test_collapsed_weights_merge():
    # pair {2,3} of l = (1, 2, 3) leaves int t^5 int^t s phi_j(s) ds dt, which is
    # C_{0 j} of l = (1, 5) divided by phi_0 = 1/sqrt(D)
    part = PairPartition.from_pairs(3, [(2, 3)])
    got = collapsed_tensor(LEG, volterra(1, 2, 3), part, 4)
    want = [fourier_coeff(LEG, volterra(1, 5), (j, 0)) for j in range(5)]
    assert np.allclose(got, want, atol=1e-14)


def test_general_coeff_examples():
    one = GeneralKernel(2, lambda x, y: np.ones_like(x + y))
    assert general_coeff(LEG, one, (0, 0)) == pytest.approx(1.0)
    assert general_coeff(LEG, one, (0, 1)) == pytest.approx(0.0, abs=1e-14)
    # the jump along the diagonal limits tensor Gauss to first order
    assert general_coeff(LEG, volterra(0, 0).as_general(), (0, 0)) == pytest.approx(0.5, abs=5e-3)


def test_general_smooth_kernel_accurate():
    G = GeneralKernel(2, lambda x, y: x * y**2)
    C = general_coeff_tensor(LEG, G, 3).data
    a = coeff_tensor(LEG, volterra(1), 3).data
    b = coeff_tensor(LEG, volterra(2), 3).data
    assert np.allclose(C, np.outer(a, b), atol=1e-13)
