"""Brute-force four-mode oracle for the post-transfer state.

Materializes the full density matrix, cross-sector coherences included, on
the number-correlated support ``|N-m1, m1, N-m2, m2>`` and evaluates
observables by direct operator action.  Exponential in the cutoff by design;
used only to validate the sector engine.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .channels import BranchChannel
from .errors import CapExceeded, TruncationMismatch
from .fock import build_spin_operators, mz_rotation
from .moments import PLAIN, RECYCLED, SignalMoments
from .states import NumberCorrelatedState

ORACLE_CAP = 10
FD_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class FourModeState:
    """``rho`` over basis rows ``(d1, m1, d2, m2)``; branch totals ``d_j + m_j`` per row."""

    basis: np.ndarray
    rho: np.ndarray

    @property
    def branch_totals(self) -> np.ndarray:
        return self.basis[:, [0, 2]] + self.basis[:, [1, 3]]

    @cached_property
    def blocks(self) -> dict:
        """Row indices grouped by ``(d1, d2, m1 + m2)``, which every observable here conserves."""
        groups = defaultdict(list)
        for i, (d1, m1, d2, m2) in enumerate(self.basis):
            groups[(int(d1), int(d2), int(m1 + m2))].append(i)
        return {key: np.array(v) for key, v in groups.items()}

    def expectation(self, local) -> complex:
        """``Tr(O rho)`` with ``O = local(n_a, d1, d2)`` acting on the acceptor sector ``n_a``."""
        total = 0.0 + 0.0j
        for (d1, d2, n_a), rows in self.blocks.items():
            m2 = self.basis[rows, 3]
            op = local(n_a, d1, d2)[np.ix_(m2, m2)]
            total += np.sum(op * self.rho[np.ix_(rows, rows)].T)
        return total

    def operator(self, local) -> np.ndarray:
        """Full matrix of ``O`` restricted to the support basis."""
        dim = len(self.basis)
        out = np.zeros((dim, dim), dtype=complex)
        for (d1, d2, n_a), rows in self.blocks.items():
            m2 = self.basis[rows, 3]
            out[np.ix_(rows, rows)] = local(n_a, d1, d2)[np.ix_(m2, m2)]
        return out


def brute_force_joint_state(
    donor: NumberCorrelatedState, channel: BranchChannel, n_cap: int | None = None
) -> FourModeState:
    """Full ``rho(t1) = sum_MN rho_MN sum A_{Mm1,Nn1} A_{Mm2,Nn2} |..><..|``."""
    n_cap = donor.n_max if n_cap is None else int(n_cap)
    if n_cap > ORACLE_CAP:
        raise CapExceeded(f"oracle cutoff {n_cap} exceeds {ORACLE_CAP}")
    if donor.n_max > n_cap or donor.n_max > channel.n_max:
        raise TruncationMismatch("donor truncation exceeds oracle or channel cutoff")
    k = donor.n_max + 1
    rows, offsets = [], []
    for big_n in range(k):
        offsets.append(len(rows))
        for m1 in range(big_n + 1):
            for m2 in range(big_n + 1):
                rows.append((big_n - m1, m1, big_n - m2, m2))
    basis = np.array(rows, dtype=int).reshape(-1, 4)
    rho = np.zeros((len(rows), len(rows)), dtype=complex)
    for big_m in range(k):
        for big_n in range(k):
            amp = donor.rho[big_m, big_n]
            if amp == 0:
                continue
            a = channel.a_block(big_m, big_n)
            sm, sn = (big_m + 1) ** 2, (big_n + 1) ** 2
            rho[offsets[big_m] : offsets[big_m] + sm, offsets[big_n] : offsets[big_n] + sn] = amp * np.kron(a, a)
    return FourModeState(basis, rho)


def _signal_operator(phi: float, recycled: bool):
    def local(n_a, d1, d2):
        _, _, jz = build_spin_operators(n_a)
        u = mz_rotation(n_a, phi)
        jz_out = u.conj().T @ jz @ u
        if recycled:
            jz_out = jz_out + 0.5 * (d1 - d2) * np.eye(n_a + 1)
        return jz_out @ jz_out

    return local


def _mean_and_second(state: FourModeState, phi: float, recycled: bool) -> tuple[float, float]:
    sig = _signal_operator(phi, recycled)
    mean = state.expectation(sig).real
    second = state.expectation(lambda n, d1, d2: np.linalg.matrix_power(sig(n, d1, d2), 2)).real
    return float(mean), float(second)


def brute_force_moments(state: FourModeState, phi: float, recycled: bool) -> SignalMoments:
    """Signal moments by direct expectation; derivative by central differences."""
    mean, second = _mean_and_second(state, phi, recycled)
    up = state.expectation(_signal_operator(phi + FD_STEP, recycled)).real
    down = state.expectation(_signal_operator(phi - FD_STEP, recycled)).real
    return SignalMoments(
        mean=mean,
        second=second,
        variance=second - mean * mean,
        dmean_dphi=float((up - down) / (2.0 * FD_STEP)),
        phi=float(phi),
        signal_kind=RECYCLED if recycled else PLAIN,
    )


def brute_force_output_distribution(state: FourModeState, phi: float) -> dict:
    """Probabilities of the four-port outcome ``(d1, d2, k1, k2)``."""
    out: dict = defaultdict(float)
    for (d1, d2, n_a), rows in state.blocks.items():
        m2 = state.basis[rows, 3]
        local = np.zeros((n_a + 1, n_a + 1), dtype=complex)
        local[np.ix_(m2, m2)] = state.rho[np.ix_(rows, rows)]
        u = mz_rotation(n_a, phi)
        probs = np.real(np.diag(u @ local @ u.conj().T))
        for k2, p in enumerate(probs):
            if abs(p) > 0:
                out[(d1, d2, n_a - k2, k2)] += float(p)
    return dict(out)
