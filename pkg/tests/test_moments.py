import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from irmz import moments
from irmz._moment_table import TABLE
from irmz.channels import apply, channel_from_sectors, beamsplitter_channel, random_channel
from irmz.errors import DegenerateSignal, NoParticles
from irmz.moments import (
    conditional_moments,
    delta_phi_at,
    plain_moments,
    plain_sensitivity,
    recycled_moments,
    recycled_sensitivity,
    signal_moments,
    spin_moments,
)
from irmz.oracle import brute_force_joint_state, brute_force_moments
from irmz.states import custom_state, nt_moments, squeezed_from_mean, squeezed_vacuum, twin_fock

from conftest import random_diagonal_state, random_mixed_state, small_donors

PHIS = (0.0, 0.1, 0.5, 1.0, 2.0)


def sector_sums(joint, fn):
    """sum_N p_N fn(mu1, mu2, mu3, mu4) over conditional moments."""
    mu = joint.conditional_table
    return sum(p * fn(*mu[n, 1:]) for n, p in enumerate(joint.weights))


def reference_plain(joint, phi):
    c, s = math.cos(phi), math.sin(phi)
    c2, s2 = c * c, s * s

    def mean(m1, m2, m3, m4):
        return 0.5 * s2 * m1 + 0.5 * c2 * m2 + 0.5 * (s2 - c2) * m1 * m1

    def second(m1, m2, m3, m4):
        return (
            (0.5 * c2 * s2 - s2 * s2 / 4) * m1
            + (-c2 * s2 + 3 * s2 * s2 / 8) * m2
            + 0.75 * c2 * s2 * m3
            + c2 * c2 / 8 * m4
            + (1.5 * c2 * s2 - s2 * s2 / 4) * m1 * m1
            + (-0.75 * c2 * s2 + 0.75 * s2 * s2) * m2 * m1
            + (-0.5 * c2 * c2 + 1.5 * c2 * s2) * m3 * m1
            + (3 * c2 * c2 / 8 - 1.5 * c2 * s2 + 3 * s2 * s2 / 8) * m2 * m2
        )

    return sector_sums(joint, mean), sector_sums(joint, second)


def reference_recycled(joint, phi):
    """Hand-expanded recycled conditional sums; the quartic term is ``sin^4(phi)/4``."""
    c, s = math.cos(phi), math.sin(phi)
    u = c - 1
    s2, u2 = s * s, u * u

    def mean(m1, m2, m3, m4):
        return 0.5 * s2 * m1 + 0.5 * u2 * m2 + 0.5 * (s2 - u2) * m1 * m1

    def second(m1, m2, m3, m4):
        return (
            (0.5 * c * c * s2 - s2 * s2 / 4) * m1
            + ((1 - c) * c * s2 + 3 * s2 * s2 / 8) * m2
            + 0.75 * u2 * s2 * m3
            + u2 * u2 / 8 * m4
            + (-s2 * c + 1.5 * c * c * s2 - s2 * s2 / 4) * m1 * m1
            + (-0.75 * u2 * s2 + 0.75 * s2 * s2) * m2 * m1
            + (-0.5 * u2 * u2 + 1.5 * u2 * s2) * m3 * m1
            + (3 * u2 * u2 / 8 - 1.5 * u2 * s2 + 3 * s2 * s2 / 8) * m2 * m2
        )

    return sector_sums(joint, mean), sector_sums(joint, second)


def reference_beamsplitter(nt, q, phi, recycled):
    n1, n2, n3, n4 = nt
    c, s = math.cos(phi), math.sin(phi)
    if recycled:
        u = c - 1
        mean = 0.25 * s * s * (n1 * q + n2 * q * q / 2) - 0.25 * n1 * (q - 1) * q * u * u
        second = (
            s**4 * (n1 * (q - 3 * q * q) / 16 + n2 * (3 * q * q - 12 * q + 10) * q * q / 32
                    - 3 * n3 * (q - 2) * q**3 / 32 + 3 * n4 * q**4 / 128)
            + 6 * s * s * u * u * (n1 * (2 * q * q - 3 * q + 1) * q / 16 + n2 * (q - 1) ** 2 * q * q / 16
                                   - n3 * (q - 1) * q**3 / 32)
            + u**4 * (3 * n2 * (q - 1) ** 2 * q * q / 16 - n1 * (q - 1) * q * (6 * q * q - 6 * q + 1) / 16)
            + 0.25 * s * s * c * c * (n1 * q + n2 * q * q / 2)
            + 0.5 * n1 * (q - 1) * q * s * s * c * u
        )
        return mean, second
    mean = q / 4 * (q / 2 * s * s * n2 + ((1 - q) * c * c + s * s) * n1)
    second = (
        3 / 128 * q**4 * s**4 * n4
        - 3 / 64 * q**3 * s * s * (q * math.cos(2 * phi) - 4 + 3 * q) * n3
        + q * q / 256 * (39 * q * q - 96 * q + 64 - 4 * (4 - 3 * q * q) * math.cos(2 * phi)
                         - 3 * q * q * math.cos(4 * phi)) * n2
        - q / 16 * (q * (6 * q * c * c * (q * c * c - 2) + 2 * math.cos(2 * phi) + 5) - 1) * n1
    )
    return mean, second


def test_frozen_table_matches_symbolic_derivation():
    pytest.importorskip("sympy")
    from irmz import derive

    namespace: dict = {}
    exec(derive.render(), namespace)
    assert namespace["TABLE"] == TABLE


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("phi", [0.2, 0.7, 1.3, 2.9])
def test_against_reference_conditional_sums(seed, phi):
    joint = apply(random_channel(5, seed), random_mixed_state(5, seed))
    for recycled, reference in ((False, reference_plain), (True, reference_recycled)):
        m = signal_moments(joint, phi, recycled)
        mean, second = reference(joint, phi)
        assert m.mean == pytest.approx(mean, abs=1e-11)
        assert m.second == pytest.approx(second, abs=1e-10)


@pytest.mark.parametrize("q", [0.15, 0.5, 0.85, 1.0])
@pytest.mark.parametrize("phi", [0.3, 1.1, 2.4])
def test_against_reference_beamsplitter_forms(q, phi):
    donor = random_diagonal_state(7, 17)
    nt = [nt_moments(donor, k) for k in (1, 2, 3, 4)]
    joint = apply(beamsplitter_channel(q, 7), donor)
    for recycled in (False, True):
        m = signal_moments(joint, phi, recycled)
        mean, second = reference_beamsplitter(nt, q, phi, recycled)
        assert m.mean == pytest.approx(mean, rel=1e-12, abs=1e-12)
        assert m.second == pytest.approx(second, rel=1e-11, abs=1e-11)


def test_conditional_moment_examples():
    assert conditional_moments(beamsplitter_channel(1.0, 3), 3) == pytest.approx((3, 9, 27, 81))
    mean, second, _, _ = conditional_moments(beamsplitter_channel(0.5, 2), 2)
    assert (mean, second) == pytest.approx((1.0, 1.5))
    assert conditional_moments(random_channel(3, 1), 0) == (0, 0, 0, 0)


def test_recycled_signal_vanishes_at_operating_point():
    for donor in small_donors():
        m = recycled_moments(apply(random_channel(4, 2), donor), 0.0)
        assert m.mean == 0 and abs(m.variance) <= 1e-15


def test_transferred_twin_fock_has_zero_plain_mean():
    assert plain_moments(apply(beamsplitter_channel(1.0, 3), twin_fock(6)), 0.0).mean == 0


@pytest.mark.parametrize(
    "donor,q,phi,recycled,tol",
    [
        (twin_fock(6), 0.8, 0.2, True, 1e-10),
        (twin_fock(6), 0.8, 0.7, False, 1e-10),
    ],
)
def test_oracle_examples(donor, q, phi, recycled, tol):
    ch = beamsplitter_channel(q, donor.n_max)
    a = signal_moments(apply(ch, donor), phi, recycled)
    b = brute_force_moments(brute_force_joint_state(donor, ch), phi, recycled)
    assert abs(a.mean - b.mean) <= tol and abs(a.second - b.second) <= tol


def squeezed_within_oracle_cap(n_t, cap=10):
    """Squeezed N_t state at tail_tol 1e-12, cut to the oracle's cutoff (rest kept as tail)."""
    full = squeezed_from_mean(n_t, tail_tol=1e-12)
    rho = full.rho[: cap + 1, : cap + 1]
    return custom_state(rho, tail_mass=1.0 - float(np.trace(rho).real))


@pytest.mark.parametrize("q,phis,tol", [(0.6, PHIS, 1e-10), (0.5, (0.4,), 1e-9)])
def test_squeezed_four_against_oracle(q, phis, tol):
    donor = squeezed_within_oracle_cap(4.0)
    ch = beamsplitter_channel(q, donor.n_max)
    joint = apply(ch, donor)
    st = brute_force_joint_state(donor, ch)
    for phi in phis:
        for recycled in (True, False):
            a = signal_moments(joint, phi, recycled)
            b = brute_force_moments(st, phi, recycled)
            assert abs(a.mean - b.mean) <= tol and abs(a.second - b.second) <= tol


def test_beamsplitter_jz2():
    donor = random_diagonal_state(6, 2)
    q = 0.3
    sm = spin_moments(apply(beamsplitter_channel(q, 6), donor))
    assert sm["jz2"] == pytest.approx(q * (1 - q) * nt_moments(donor, 1) / 4, abs=1e-13)
    assert sm["jx2"] == pytest.approx(sm["jy2"], abs=1e-13)


@pytest.mark.parametrize("seed", range(5))
def test_spin_moments_against_explicit_operators(seed):
    donor = random_mixed_state(4, seed)
    ch = random_channel(4, seed + 10)
    st = brute_force_joint_state(donor, ch)
    sm = spin_moments(apply(ch, donor))
    from irmz.fock import build_spin_operators

    def word(fn):
        return st.expectation(lambda n, d1, d2: fn(*build_spin_operators(n))).real

    assert sm["jz2"] == pytest.approx(word(lambda x, y, z: z @ z), abs=1e-12)
    assert sm["jx2"] == pytest.approx(word(lambda x, y, z: x @ x), abs=1e-12)
    assert sm["jz4"] == pytest.approx(word(lambda x, y, z: np.linalg.matrix_power(z, 4)), abs=1e-12)
    assert sm["jx4"] == pytest.approx(word(lambda x, y, z: np.linalg.matrix_power(x, 4)), abs=1e-12)
    assert sm["jz2jx2_sym"] == pytest.approx(word(lambda x, y, z: z @ z @ x @ x + x @ x @ z @ z), abs=1e-12)
    anti = word(lambda x, y, z: (x @ z + z @ x) @ (x @ z + z @ x))
    assert sm["anti2"] == pytest.approx(anti, abs=1e-12)
    # closed operator identities
    xzzx = word(lambda x, y, z: x @ z @ z @ x)
    xzxz = word(lambda x, y, z: x @ z @ x @ z)
    zzxx = word(lambda x, y, z: z @ z @ x @ x)
    assert xzzx == pytest.approx(zzxx - sm["jz2"] + sm["jx2"], abs=1e-12)
    assert xzxz == pytest.approx(zzxx - 0.5 * sm["jz2"], abs=1e-12)


@pytest.mark.parametrize("seed", range(8))
def test_analytic_derivative_against_finite_difference(seed):
    joint = apply(random_channel(5, seed), random_mixed_state(5, seed + 1))
    h = 1e-5
    for recycled in (True, False):
        for phi in (0.15, 0.6, 1.2, 2.5):
            d = signal_moments(joint, phi, recycled).dmean_dphi
            fd = (signal_moments(joint, phi + h, recycled).mean - signal_moments(joint, phi - h, recycled).mean) / (2 * h)
            if abs(d) > 1e-8:
                assert abs(d - fd) <= 1e-6 * abs(d)


def test_variance_nonnegative():
    for donor in small_donors():
        for seed in range(5):
            joint = apply(random_channel(4, seed), donor)
            for phi in PHIS:
                for recycled in (True, False):
                    assert signal_moments(joint, phi, recycled).variance >= -1e-10


def test_recycled_sensitivity_examples():
    tf = recycled_sensitivity(apply(beamsplitter_channel(0.5, 5), twin_fock(10)))
    assert tf.delta_phi == pytest.approx(math.sqrt(2 / 35), rel=1e-12)
    assert tf.phi_opt == 0.0
    assert tf.bound_heisenberg == pytest.approx(math.sqrt(2 / 35), rel=1e-12)
    sq = squeezed_from_mean(10.0)
    rep = recycled_sensitivity(apply(beamsplitter_channel(0.5, sq.n_max), sq))
    assert rep.delta_phi == pytest.approx(1 / math.sqrt(5 * 6.5), rel=1e-6)
    with pytest.raises(NoParticles):
        recycled_sensitivity(apply(beamsplitter_channel(0.5, 1), twin_fock(0)))


def test_recycled_limit_matches_small_angle_error_propagation():
    joint = apply(random_channel(4, 7), random_mixed_state(4, 2))
    limit = recycled_sensitivity(joint).delta_phi
    assert delta_phi_at(joint, 1e-3, True) == pytest.approx(limit, rel=1e-5)


def test_plain_sensitivity_examples():
    for n_t in (4, 10):
        rep = plain_sensitivity(apply(beamsplitter_channel(1.0, n_t // 2), twin_fock(n_t)))
        assert rep.delta_phi == pytest.approx(math.sqrt(2 / (n_t * (n_t + 2))), rel=1e-12)
    sq = squeezed_from_mean(6.0)
    rep = plain_sensitivity(apply(beamsplitter_channel(1.0, sq.n_max), sq))
    assert rep.delta_phi == pytest.approx(1 / math.sqrt(6 * 8), rel=1e-8)


def test_plain_degenerate():
    # sector N=2 with P = (3/4, 0, 1/4): Var(n) = <n>^2 + <n>, so <J_z^2> = <J_x^2>
    sig = [np.eye(1), np.diag([1.0, 0.0]), np.diag([0.75, 0.0, 0.25])]
    joint = apply(channel_from_sectors(sig), twin_fock(4))
    sm = spin_moments(joint)
    assert sm["jz2"] == pytest.approx(sm["jx2"], abs=1e-15)
    with pytest.raises(DegenerateSignal):
        plain_sensitivity(joint)
    with pytest.raises(NoParticles):
        plain_sensitivity(apply(beamsplitter_channel(0.0, 1), twin_fock(2)))


@pytest.mark.parametrize("q", [0.3, 0.75])
def test_plain_operating_point_by_numerical_minimization(q):
    donor = twin_fock(12)
    joint = apply(beamsplitter_channel(q, 6), donor)
    rep = plain_sensitivity(joint)
    grid = np.linspace(1e-4, math.pi / 2 - 1e-4, 10_000)
    vals = [delta_phi_at(joint, p, False) for p in grid]
    i = int(np.argmin(vals))
    res = minimize_scalar(lambda p: delta_phi_at(joint, p, False), bracket=(grid[i - 1], grid[i], grid[i + 1]),
                          method="golden", tol=1e-10)
    assert res.x == pytest.approx(rep.phi_opt, abs=1e-6)
    assert res.fun == pytest.approx(rep.delta_phi, rel=1e-9)


def test_bounds_and_dominance():
    worst_gap = -math.inf
    for donor in small_donors():
        for seed in range(10):
            joint = apply(random_channel(4, seed), donor)
            rep = recycled_sensitivity(joint)
            assert rep.delta_phi <= rep.bound_heisenberg + 1e-12
            if rep.qcrb is not None:
                assert rep.delta_phi >= rep.qcrb - 1e-10
    for n_t in (4, 8, 20):
        for q in np.linspace(0.05, 1.0, 12):
            for donor in (twin_fock(n_t), squeezed_from_mean(float(n_t))):
                joint = apply(beamsplitter_channel(q, donor.n_max), donor)
                rec = recycled_sensitivity(joint)
                try:
                    plain = plain_sensitivity(joint)
                except DegenerateSignal:
                    continue
                assert plain.delta_phi >= plain.qcrb - 1e-10
                worst_gap = max(worst_gap, rec.delta_phi - plain.delta_phi)
    # recycling never loses on the beamsplitter grid
    assert worst_gap <= 1e-12, f"counterexample: recycled exceeds plain by {worst_gap}"
