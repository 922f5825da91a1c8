import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import seeds
from qconc.entanglement import trace_moments
from qconc.observables import (
    PAIRINGS,
    PRINTED_M_COEFFS,
    PRINTED_N_SCALE,
    CopyLayout,
    build_A,
    build_B,
    build_cyclic_swap,
    build_M,
    build_mm_reduced,
    build_N,
    copies,
    dicke_overlap,
    dicke_phase_state,
    enumerate_groups,
    exact_group_moments,
    pairing_dependence_residual,
    pairing_projector,
    rank_checks,
    resolve_two_copy_relation,
    singlet_projector,
    symmetrization_redundancy,
    t1_from_overlap,
    to_copy_major,
    to_party_major,
    two_copy_overlap,
    verify_four_copy,
    verify_groups,
    verify_mm_reduction,
    verify_mn_decomposition,
)
from qconc.states import DensityMatrix, RandomSource, as_density, canonical_state, random_rank2_state
from qconc.tensor import DenseOperator, frobenius, identity, kron, partial_trace, rank

SINGLET = as_density(canonical_state("bell_psiminus"))
PRODUCT = as_density(canonical_state("product00"))
GHZ_AB = DensityMatrix(np.diag([0.5, 0, 0, 0.5]), (2, 2))
MIXED = DensityMatrix(np.eye(4) / 4, (2, 2))


def _herm_defect(op):
    return frobenius(op, op.dag())


# -- layout --


@pytest.mark.parametrize("n", [1, 2, 4])
def test_layout_roundtrip(n, np_rng):
    op = DenseOperator(np_rng.standard_normal((4**n, 4**n)), (2,) * (2 * n))
    assert np.array_equal(to_copy_major(to_party_major(op, n), n).data, op.data)


def test_layout_perm():
    assert CopyLayout(2).party_major_perm() == [0, 2, 1, 3]
    assert CopyLayout(4).party_major_perm() == [0, 2, 4, 6, 1, 3, 5, 7]
    with pytest.raises(ValueError):
        CopyLayout(2, "interleaved")


def test_party_major_of_product_state():
    a = random_rank2_state(RandomSource(4))
    b = random_rank2_state(RandomSource(5))
    pm = to_party_major(kron(a, b), 2)
    # A1 A2 B1 B2: qubits (A1, B1) carry a, (A2, B2) carry b
    assert frobenius(partial_trace(pm, [0, 2]), a) < 1e-13
    assert frobenius(partial_trace(pm, [1, 3]), b) < 1e-13


# -- singlet and B --


def test_singlet_projector():
    p = singlet_projector()
    ket01 = np.zeros(4)
    ket01[1] = 1
    assert np.allclose(p.data @ ket01, [0, 0.5, -0.5, 0])
    assert frobenius(p @ p, p) < 1e-15
    sym = identity([2, 2]) - p
    assert rank(sym) == 3
    assert abs(p.trace() - 1) < 1e-15


def test_B_properties():
    b = build_B()
    assert b.dims == (2,) * 4
    assert abs(b.trace() - 4) < 1e-13
    assert _herm_defect(b) < 1e-12
    assert rank(b) == 1
    assert np.linalg.eigvalsh(b.data).min() > -1e-12


def test_two_copy_overlap_examples():
    assert two_copy_overlap(SINGLET) == pytest.approx(1.0, abs=1e-14)
    assert two_copy_overlap(PRODUCT) == pytest.approx(0.0, abs=1e-15)
    assert two_copy_overlap(MIXED) == pytest.approx(0.25, abs=1e-15)
    assert trace_moments(MIXED).t1 == pytest.approx(0.25, abs=1e-15)


def test_resolve_two_copy_relation():
    verdict, check = resolve_two_copy_relation(200, RandomSource(0), 1e-10)
    assert verdict == "linear"
    assert check.passed and check.max_residual < 1e-10
    assert check.details["max_residual_sqrt"] > 0.2
    assert check.details["maximally_mixed"]["sqrt_overlap"] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        resolve_two_copy_relation(50, RandomSource(0), 1e-10)


def test_pure_states_do_not_discriminate():
    for name in ("bell_psiminus", "product00"):
        o = two_copy_overlap(canonical_state(name))
        assert abs(o - math.sqrt(o)) < 1e-7


def test_t1_from_overlap():
    assert t1_from_overlap(0.25, "linear") == 0.25
    assert t1_from_overlap(0.25, "sqrt") == 0.5
    with pytest.raises(ValueError):
        t1_from_overlap(0.25, "neither")


# -- SWAP and A --


@pytest.mark.parametrize("direction", ["forward", "backward"])
def test_swap_permutation(direction):
    s = build_cyclic_swap(direction).data
    assert set(np.unique(s)) <= {0, 1}
    assert np.all(s.sum(axis=0) == 1) and np.all(s.sum(axis=1) == 1)
    assert np.array_equal(np.linalg.matrix_power(s, 4), np.eye(256))
    assert np.array_equal(s @ s.T, np.eye(256))


def test_swap_directions_inverse():
    f, b = build_cyclic_swap("forward").data, build_cyclic_swap("backward").data
    assert np.array_equal(f @ b, np.eye(256))
    assert np.array_equal(f.T, b)
    with pytest.raises(ValueError):
        build_cyclic_swap("sideways")


def test_swap_on_basis_states():
    # slots hold two-qubit basis labels 0..3; forward: |a>|b>|c>|d> -> |b>|c>|d>|a>
    a, b, c, d = 1, 2, 3, 0
    idx = ((a * 4 + b) * 4 + c) * 4 + d
    vec = np.zeros(256)
    vec[idx] = 1
    out = build_cyclic_swap("forward").data @ vec
    assert out[((b * 4 + c) * 4 + d) * 4 + a] == 1
    out = build_cyclic_swap("backward").data @ vec
    assert out[((d * 4 + a) * 4 + b) * 4 + c] == 1


def test_A_examples():
    a = build_A()
    assert _herm_defect(a) < 1e-12
    assert a.expectation(copies(SINGLET, 4)) == pytest.approx(1.0, abs=1e-12)
    assert a.expectation(copies(PRODUCT, 4)) == pytest.approx(0.0, abs=1e-14)
    assert a.expectation(copies(GHZ_AB, 4)) == pytest.approx(0.125, abs=1e-14)


def test_verify_four_copy():
    direction, check = verify_four_copy(200, RandomSource(1), 1e-10)
    assert direction in ("forward", "backward")
    assert check.passed and check.max_residual < 1e-10
    d = check.details["directions"][direction]
    assert d["best_fit_scalar"] == pytest.approx(16.0, rel=1e-9)
    assert check.status == "scalar_corrected"
    assert check.to_dict()["chosen_direction"] == direction
    with pytest.raises(ValueError):
        verify_four_copy(10, RandomSource(1), 1e-10)


def test_verify_four_copy_roundoff_floor():
    _, check = verify_four_copy(50, RandomSource(1), 1e-30)
    assert not check.passed


def test_symmetrization_redundant():
    assert symmetrization_redundancy(trials=20) < 1e-12


@given(seeds)
def test_four_copy_identity_property(seed):
    rho = random_rank2_state(RandomSource(seed))
    assert abs(build_A().expectation(copies(rho, 4)) - trace_moments(rho).t2) < 1e-10


# -- M, N and the decomposition --


def test_M_rank_and_trace():
    m = build_M()
    assert _herm_defect(m) < 1e-12
    assert rank(m, 1e-10) == 2
    assert m.trace().real == pytest.approx(-math.sqrt(2) / 2, abs=1e-14)


def test_pairing_dependence():
    assert pairing_dependence_residual() < 1e-12


def test_dicke_state():
    psi = dicke_phase_state()
    nz = np.flatnonzero(np.abs(psi.amplitudes) > 1e-14)
    assert len(nz) == 6
    assert np.allclose(np.abs(psi.amplitudes[nz]), 1 / math.sqrt(6))
    assert all(bin(i).count("1") == 2 for i in nz)
    assert abs(psi.inner(psi) - 1) < 1e-15
    assert abs(dicke_overlap()) < 1e-12


def test_N_spectrum():
    n = build_N()
    assert _herm_defect(n) < 1e-12
    assert rank(n, 1e-10) == 2
    ev = np.linalg.eigvalsh(n.data)
    assert ev[-1] == pytest.approx(PRINTED_N_SCALE, abs=1e-12)
    assert ev[0] == pytest.approx(-PRINTED_N_SCALE, abs=1e-12)


def test_rank_checks():
    check = rank_checks()
    assert check.passed
    assert check.details["rank_M"] == 2 and check.details["rank_N"] == 2


def test_mn_decomposition():
    check = verify_mn_decomposition(1e-9, trials=200, rng=RandomSource(2))
    assert check.passed and check.max_residual < 1e-9
    assert check.status in ("exact", "scalar_corrected")
    exp = check.details["expectation"]
    assert exp["max_residual_scaled"] < 1e-10
    assert exp["max_residual_A_vs_t2"] < 1e-10
    if check.status == "scalar_corrected":
        assert "scalar_corrections" in check.details
    fitted = check.details["fitted_constants"]
    # magnitudes 2 sqrt(2); the printed third sign is flipped
    assert np.allclose(np.abs(fitted["M_coefficients"]), 2 * math.sqrt(2), atol=1e-9)
    assert np.sign(fitted["M_coefficients"][2]) == -np.sign(PRINTED_M_COEFFS[2])
    assert fitted["N_scale"] == pytest.approx(math.sqrt(6), abs=1e-9)


def test_mn_singlet_expectation():
    pm = to_party_major(copies(SINGLET, 4), 4)
    m, n = build_M(), build_N()
    mm = kron(m, m).expectation(pm)
    nn = kron(n, n).expectation(pm)
    assert 0.5 * (16 * mm - 2 * nn) == pytest.approx(1.0, abs=1e-12)


def test_mm_reduction():
    check = verify_mm_reduction(200, RandomSource(3), 1e-10)
    assert check.passed
    assert check.details["max_residual_group1_marginal"] < 1e-10
    assert check.details["operator_distance"] > 0.1
    red = build_mm_reduced()
    assert _herm_defect(red) < 1e-12


def test_pairing_projectors_distinct():
    q = [pairing_projector(p) for p in PAIRINGS]
    for i in range(3):
        assert abs(q[i].trace() - 1) < 1e-14
        for j in range(i + 1, 3):
            assert frobenius(q[i], q[j]) > 0.1


# -- groups --


def test_local6_has_six_groups():
    groups = enumerate_groups("local6")
    assert len(groups) == 6
    assert len({g.label for g in groups}) == 6


def test_local6_n_weights():
    n_groups = [g for g in enumerate_groups("local6") if g.label.startswith("N:")]
    assert len(n_groups) == 4
    assert sorted(abs(g.weight) for g in n_groups) == pytest.approx([3.0] * 4)
    assert sorted(g.printed_weight for g in n_groups) == pytest.approx([-1.5, -1.5, 1.5, 1.5])
    for g in n_groups:
        same = g.label.count("Psibar") != 1
        assert (g.weight < 0) == same


def test_global_groups():
    groups = enumerate_groups("global")
    assert [g.label for g in groups] == ["B", "A"]
    assert len(groups[0].projectors) == 1
    with pytest.raises(ValueError):
        enumerate_groups("local10")


@pytest.mark.parametrize("scheme", ["global", "local6"])
def test_group_invariants(scheme):
    for g in enumerate_groups(scheme):
        assert g.reconstruction_residual() < 1e-9
        idem, ortho = g.projector_defects()
        assert idem < 1e-10 and ortho < 1e-10
        assert _herm_defect(g.observable) < 1e-12


def test_local6_factorizes():
    assert all(g.ab_schmidt_rank() == 1 for g in enumerate_groups("local6"))
    # the global A is not a product across the cut
    assert enumerate_groups("global")[1].ab_schmidt_rank() > 1


@pytest.mark.parametrize("scheme", ["global", "local6"])
def test_verify_groups(scheme):
    check = verify_groups(scheme, 50, RandomSource(4), 1e-10)
    assert check.passed, check.to_dict()


@given(seeds, st.sampled_from(["global", "local6"]))
def test_group_reconstruction_property(seed, scheme):
    rho = random_rank2_state(RandomSource(seed))
    t1, t2 = exact_group_moments(enumerate_groups(scheme), rho)
    m = trace_moments(rho)
    assert abs(t1 - m.t1) < 1e-10
    assert abs(t2 - m.t2) < 1e-10


def test_group_probabilities_dims_checked():
    g = enumerate_groups("local6")[0]
    with pytest.raises(ValueError):
        g.probabilities(copies(SINGLET, 2))
