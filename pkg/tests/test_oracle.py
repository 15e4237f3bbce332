import numpy as np
import pytest

from irmz.channels import apply, beamsplitter_channel, random_channel
from irmz.errors import CapExceeded
from irmz.fock import build_spin_operators
from irmz.moments import signal_moments
from irmz.oracle import brute_force_joint_state, brute_force_moments, brute_force_output_distribution
from irmz.states import squeezed_vacuum, twin_fock

from conftest import small_donors


def support_index(state, row):
    hits = np.flatnonzero((state.basis == row).all(axis=1))
    return int(hits[0])


def test_perfect_transfer_of_single_pair():
    st = brute_force_joint_state(twin_fock(2), beamsplitter_channel(1.0, 1))
    i = support_index(st, (0, 1, 0, 1))
    expected = np.zeros_like(st.rho)
    expected[i, i] = 1.0
    assert np.allclose(st.rho, expected, atol=1e-15)


def test_null_transfer_keeps_donor():
    donor = squeezed_vacuum(0.5, tail_tol=1e-3)
    st = brute_force_joint_state(donor, beamsplitter_channel(0.0, donor.n_max))
    occupied = np.abs(np.diag(st.rho)) > 0
    assert np.all(st.basis[occupied][:, [1, 3]] == 0)
    assert np.isclose(np.trace(st.rho).real, donor.populations.sum())


def test_half_transfer_branch_marginal():
    st = brute_force_joint_state(twin_fock(2), beamsplitter_channel(0.5, 1))
    p = np.diag(st.rho).real
    m1 = st.basis[:, 1]
    assert p[m1 == 0].sum() == pytest.approx(0.5, abs=1e-15)
    assert p[m1 == 1].sum() == pytest.approx(0.5, abs=1e-15)


def test_cap():
    with pytest.raises(CapExceeded):
        brute_force_joint_state(twin_fock(2), beamsplitter_channel(0.5, 11), n_cap=11)


@pytest.mark.parametrize("seed", range(4))
def test_state_validity_and_number_conservation(seed, donors):
    ch = random_channel(4, seed)
    for donor in donors:
        st = brute_force_joint_state(donor, ch)
        rho = st.rho
        assert np.max(np.abs(rho - rho.conj().T)) <= 1e-12
        assert np.linalg.eigvalsh(rho)[0] >= -1e-10
        assert abs(np.trace(rho).real - donor.populations.sum()) <= 1e-12
        totals = st.branch_totals
        assert np.all(totals[:, 0] == totals[:, 1])


@pytest.mark.parametrize("seed", range(4))
def test_anticorrelation_and_pi_symmetry(seed, donors):
    ch = random_channel(4, seed)
    for donor in donors:
        st = brute_force_joint_state(donor, ch)
        d1, m1, d2, m2 = st.basis.T
        jz_plus_lz = 0.5 * (m1 - m2) + 0.5 * (d1 - d2)
        assert np.max(np.abs(jz_plus_lz[:, None] * st.rho)) <= 1e-12

        def jx_word(word):
            def local(n, _d1, _d2):
                jx, _, jz = build_spin_operators(n)
                out = np.eye(n + 1, dtype=complex)
                for letter in word:
                    out = out @ (jx if letter == "x" else jz)
                return out

            return local

        for word in ("x", "xxx", "xzz"):
            assert abs(st.expectation(jx_word(word))) <= 1e-12


def test_output_distribution_sums_to_one():
    donor = twin_fock(4)
    st = brute_force_joint_state(donor, beamsplitter_channel(0.6, 2))
    dist = brute_force_output_distribution(st, 0.9)
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    for (d1, d2, k1, k2) in dist:
        assert d1 + d2 + k1 + k2 == 4


def test_oracle_recycled_mean_vanishes_at_zero():
    for donor in small_donors():
        st = brute_force_joint_state(donor, random_channel(4, 3))
        assert abs(brute_force_moments(st, 0.0, True).mean) <= 1e-12


def test_twin_fock_cross_check():
    donor = twin_fock(4)
    ch = beamsplitter_channel(0.7, 2)
    st = brute_force_joint_state(donor, ch)
    joint = apply(ch, donor)
    for recycled in (True, False):
        a = signal_moments(joint, 0.3, recycled)
        b = brute_force_moments(st, 0.3, recycled)
        assert abs(a.mean - b.mean) <= 1e-10
        assert abs(a.second - b.second) <= 1e-10
