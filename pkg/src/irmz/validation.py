"""Self-check suite: sector engine against the four-mode oracle plus invariants.

Kept small (cutoff 4) so it runs in a few seconds on an installed copy.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import moments
from .channels import BranchChannel, apply, beamsplitter_channel, dephase, random_channel
from .fock import is_unitary, mz_rotation
from .oracle import brute_force_joint_state, brute_force_moments
from .states import classical_state, custom_state, squeezed_vacuum, twin_fock

PHIS = (0.0, 0.1, 0.5, 1.0, 2.0)
N_MAX = 4


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _donors(n_max: int = N_MAX) -> list:
    rng = np.random.default_rng(11)
    k = n_max + 1
    g = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    mixed = g @ g.conj().T
    return [
        twin_fock(2 * n_max),
        squeezed_vacuum(0.5, tail_tol=1e-2, hard_cap=n_max),
        classical_state(rng.dirichlet(np.ones(k))),
        custom_state(mixed / np.trace(mixed).real),
    ]


def _channels(n_max: int, count: int, extra: BranchChannel | None) -> list:
    chans = [beamsplitter_channel(0.35, n_max)]
    chans += [random_channel(n_max, seed) for seed in range(count)]
    if extra is not None:
        chans.append(extra)
    return chans


def check_unitarity(n_max: int = N_MAX) -> CheckResult:
    worst = 0.0
    for n in range(2 * n_max + 1):
        for phi in PHIS:
            u = mz_rotation(n, phi)
            worst = max(worst, float(np.max(np.abs(u @ u.conj().T - np.eye(n + 1)))))
    return CheckResult("mz-unitarity", worst <= 1e-12 and is_unitary(mz_rotation(3, 0.7)), f"max |UU^+ - 1| = {worst:.3g}")


def check_oracle(recycled: bool, channels: list, donors: list, tol: float = 1e-10) -> CheckResult:
    worst = 0.0
    for donor in donors:
        for ch in channels:
            if ch.n_max < donor.n_max:
                continue
            joint = apply(ch, donor)
            state = brute_force_joint_state(donor, ch)
            for phi in PHIS:
                a = moments.signal_moments(joint, phi, recycled)
                b = brute_force_moments(state, phi, recycled)
                worst = max(worst, abs(a.mean - b.mean), abs(a.second - b.second))
    name = "recycled-moment-oracle" if recycled else "plain-moment-oracle"
    return CheckResult(name, worst <= tol, f"max |engine - oracle| = {worst:.3g}")


def check_dephasing(channels: list, donors: list, tol: float = 1e-12) -> CheckResult:
    worst = 0.0
    for donor in donors:
        for ch in channels:
            if ch.n_max < donor.n_max:
                continue
            a = moments.recycled_sensitivity(apply(ch, donor)).delta_phi
            b = moments.recycled_sensitivity(apply(dephase(ch), donor)).delta_phi
            worst = max(worst, abs(a - b) / a)
    return CheckResult("dephasing-invariance", worst <= tol, f"max relative change = {worst:.3g}")


def check_convexity(channels: list, donors: list, tol: float = 1e-10) -> CheckResult:
    worst = math.inf
    for donor in donors:
        for ch in channels:
            if ch.n_max < donor.n_max:
                continue
            pair = apply(ch, donor).pair_moments
            total = donor.populations.sum()
            worst = min(worst, pair[1, 1] - pair[0, 1] ** 2 / total)
    return CheckResult("convexity", bool(worst >= -tol), f"min <N1 N2> - <N1>^2 = {worst:.3g}")


def check_trace_preservation(channels: list, tol: float = 1e-12) -> CheckResult:
    worst = 0.0
    for ch in channels:
        for n in range(ch.n_max + 1):
            worst = max(worst, abs(np.trace(ch.sector(n)).real - 1.0))
    return CheckResult("trace-preservation", bool(worst <= tol), f"max |tr sigma - 1| = {worst:.3g}")


@contextmanager
def perturbed_coefficient(name: str = "recycled_mean", index: int = 0, delta: float = 1e-3):
    """Temporarily shift one compiled moment coefficient (fault-injection hook)."""
    basis, idx, coef = moments._COMPILED[name]
    bumped = coef.copy()
    bumped[index] += delta
    moments._COMPILED[name] = (basis, idx, bumped)
    try:
        yield
    finally:
        moments._COMPILED[name] = (basis, idx, coef)


def run_all(extra_channel: BranchChannel | None = None, n_channels: int = 6) -> list[CheckResult]:
    """Run every check in order; callers report the first failure."""
    donors = _donors()
    if extra_channel is not None:
        donors = [d for d in donors if d.n_max <= extra_channel.n_max] or donors
    channels = _channels(N_MAX, n_channels, extra_channel)
    return [
        check_unitarity(),
        check_trace_preservation(channels),
        check_oracle(True, channels, donors),
        check_oracle(False, channels, donors),
        check_convexity(channels, donors),
        check_dephasing(channels, donors),
    ]
