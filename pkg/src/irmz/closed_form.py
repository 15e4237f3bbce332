"""Closed-form Fisher informations, bounds and sensitivities.

All functions take moments (``<N_t^k>``, ``N_a``, ``q``), never states, except
:func:`qfi_pure_numeric`, which evaluates the pure-state QFI numerically on a
post-transfer sector state.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channels import JointSectorState
from .errors import BadMoments, NoParticles, NotPure
from .fock import _spin_operators


@dataclass(frozen=True)
class FisherReport:
    f_b: float
    f_a: float
    qcrb_b: float
    qcrb_a: float


def _positive(n: float, what: str = "particle number") -> None:
    if not n > 0:
        raise NoParticles(f"{what} must be positive, got {n}")


def fisher_donor(v_nt: float, n_t: float) -> float:
    """QFI of a number-correlated donor in a lossless MZ."""
    return (v_nt + n_t * (n_t + 2.0)) / 2.0


def delta_phi_mz(v_nt: float, n_t: float) -> float:
    """Optimal ``L_z^2`` sensitivity; saturates the QCRB."""
    _positive(n_t)
    return math.sqrt(2.0 / (v_nt + n_t * (n_t + 2.0)))


def heisenberg_bound(n_a: float) -> float:
    """Worst-case recycled sensitivity over all number-conserving transfers."""
    _positive(n_a)
    return math.sqrt(2.0 / (n_a * (n_a + 2.0)))


def delta_phi_recycled_bs(v_nt: float, n_t: float, q: float) -> float:
    _positive(n_t)
    _positive(q, "q")
    n_a = q * n_t
    return math.sqrt(2.0 / (q * q * v_nt + n_a * (n_a + 2.0)))


def fisher_acceptor_bs(
    f_b: float, n_a: float, q: float, v_nt: float | None = None, n_t: float | None = None
) -> float:
    """``q^2 F_b + (1 - q) N_a``.

    When ``v_nt`` and ``n_t`` are given, the equivalent form
    ``(q^2 V + N_a (N_a + 2)) / 2`` is checked against it.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    f_a = q * q * f_b + (1.0 - q) * n_a
    if v_nt is not None and n_t is not None:
        other = (q * q * v_nt + n_a * (n_a + 2.0)) / 2.0
        if abs(other - f_a) > 1e-12 * max(1.0, abs(f_a)):
            raise ValueError(f"inconsistent moments: {f_a!r} vs {other!r}")
    return f_a


def fisher_report(v_nt: float, n_t: float, q: float) -> FisherReport:
    f_b = fisher_donor(v_nt, n_t)
    f_a = fisher_acceptor_bs(f_b, q * n_t, q, v_nt, n_t)
    inv = lambda f: 1.0 / math.sqrt(f) if f > 0 else math.inf
    return FisherReport(f_b, f_a, inv(f_b), inv(f_a))


def _check_plain_args(n_a: float, q: float) -> None:
    _positive(n_a)
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")


def plain_closed_form_tf(n_a: float, q: float) -> float:
    """Optimal plain-signal sensitivity for a twin-Fock donor and beamsplitter transfer."""
    _check_plain_args(n_a, q)
    p = 1.0 - q
    a_tf = (n_a - 2.0) * (n_a + 2.0) * (n_a + 4.0) + 12.0 * p * (2.0 + n_a * (n_a + 3.0 - q))
    root = math.sqrt(max(0.5 * p * (1.0 + 2.0 * p * (n_a - 3.0 * q)) * a_tf, 0.0))
    num = 2.0 * (n_a + 2.0 * q) + root + 2.0 * p * (1.0 + (n_a - 3.0 * q) * (n_a + 2.0))
    return math.sqrt(num / (n_a * (n_a + 2.0 * q) ** 2))


def plain_closed_form_sq(n_a: float, q: float) -> float:
    """Optimal plain-signal sensitivity for a squeezed-vacuum donor and beamsplitter transfer."""
    _check_plain_args(n_a, q)
    p = 1.0 - q
    a_sq = p * (1.0 - 10.0 * q * p) + (n_a + 2.0 * q) * (9.0 - 5.0 * q * (2.0 - q) + 8.0 * n_a * (n_a + 2.0))
    root = math.sqrt(max(p * (1.0 + 5.0 * p * n_a) * a_sq, 0.0))
    num = 2.0 * (n_a + 2.0 * q) + root + p * (1.0 + n_a * (5.0 * p + 8.0 * (n_a + 2.0 * q)))
    return math.sqrt(num / (2.0 * n_a * (n_a + 2.0 * q) ** 2))


def _check_moments(nt_k: Sequence[float]) -> tuple[float, float, float, float]:
    if len(nt_k) != 4:
        raise BadMoments("need <N_t^k> for k = 1..4")
    n1, n2, n3, n4 = (float(x) for x in nt_k)
    for k, val in ((2, n2), (3, n3), (4, n4)):
        if val < n1**k * (1.0 - 1e-12) - 1e-12:
            raise BadMoments(f"<N_t^{k}> = {val!r} < <N_t>^{k}")
    return n1, n2, n3, n4


def plain_closed_form_general(nt_k: Sequence[float], q: float) -> float:
    """Optimal plain-signal sensitivity for any number-correlated donor (beamsplitter).

    ``nt_k`` holds ``<N_t>, <N_t^2>, <N_t^3>, <N_t^4>``.
    """
    n_t, n2, n3, n4 = _check_moments(nt_k)
    _check_plain_args(q * n_t, q)
    p = 1.0 - q
    f_b = fisher_donor(n2 - n_t * n_t, n_t)
    g = q * f_b + p * n_t
    a = (
        8.0 * g * (10.0 - 3.0 * q * (4.0 - q) - q * g)
        - 24.0 * (3.0 - q * (3.0 - q)) * n_t
        + 3.0 * q * q * (q * n4 + 4.0 * (2.0 - q) * n3)
    )
    radicand = 0.5 * p * (n_t + q * p * (6.0 * (f_b - 2.0 * n_t) - n_t * n_t)) * a
    brace = math.sqrt(max(radicand, 0.0)) + p * (
        q * q * (3.0 * n3 - 2.0 * f_b * n_t)
        + 4.0 * q * (4.0 - q * (2.0 + q) * p) * f_b
        - 2.0 * n_t * (5.0 + p * (q * n_t - 6.0 * p))
    )
    return math.sqrt(q * q / f_b + brace / (4.0 * q**3 * f_b * f_b))


def plain_closed_form_general_fa(nt_k: Sequence[float], q: float) -> float:
    """Same quantity written through the acceptor Fisher information ``F_a``."""
    n_t, n2, n3, n4 = _check_moments(nt_k)
    _check_plain_args(q * n_t, q)
    p = 1.0 - q
    n_a = q * n_t
    f_a = fisher_acceptor_bs(fisher_donor(n2 - n_t * n_t, n_t), n_a, q)
    base = f_a - p * n_a
    a_t = (
        8.0 * f_a * (10.0 - 3.0 * q * (4.0 - q) - f_a)
        - 24.0 * (3.0 - q * (3.0 - q)) * n_a
        + 3.0 * q**3 * (q * n4 + 4.0 * (2.0 - q) * n3)
    )
    radicand = 0.5 * p * (p * (6.0 * f_a - n_a * n_a) - (5.0 - 6.0 * q * q) * n_a) * a_t
    brace = math.sqrt(max(radicand, 0.0)) + p * (
        3.0 * q**3 * n3 + 4.0 * (4.0 - q * (2.0 + q) * p) * f_a - 2.0 * n_a * (f_a + 7.0 - 2.0 * q**4)
    )
    return math.sqrt(q**4 / base + brace / (4.0 * base * base))


def beamsplitter_spin_moments(nt_k: Sequence[float], q: float) -> dict[str, float]:
    """Acceptor pseudo-spin moments after a beamsplitter transfer, from ``<N_t^k>``."""
    n_t, n2, n3, n4 = _check_moments(nt_k)
    p = 1.0 - q
    jz2 = q * p * n_t / 4.0
    jx2 = q / 4.0 * (q * n2 / 2.0 + n_t)
    jz4 = q * p / 16.0 * (3.0 * q * p * n2 + (6.0 * q * q - 6.0 * q + 1.0) * n_t)
    jx4 = q / 16.0 * (
        3.0 * q**3 * n4 / 8.0
        + 1.5 * q * q * (2.0 - q) * n3
        + q / 2.0 * (3.0 * q * q - 12.0 * q + 10.0) * n2
        + (1.0 - 3.0 * q) * n_t
    )
    jz2jx2 = q * p / 16.0 * (q * q / 2.0 * n3 + q * p * n2 + (1.0 - 2.0 * q) * n_t)
    # <Jx Jz^2 Jx> and <Jx Jz Jx Jz> rewritten through <Jz^2 Jx^2>
    jxzzx = jz2jx2 - jz2 + jx2
    jxzxz = jz2jx2 - 0.5 * jz2
    anti2 = jxzzx + jz2jx2 + 2.0 * jxzxz
    return {
        "jz2": jz2,
        "jx2": jx2,
        "jy2": jx2,
        "jz4": jz4,
        "jx4": jx4,
        "jz2jx2_sym": 2.0 * jz2jx2,
        "anti2": anti2,
    }


def mz_spin_moments(nt_k: Sequence[float]) -> dict[str, float]:
    """Donor pseudo-spin moments of a number-correlated state entering the MZ directly.

    ``V(L_x^2)`` follows the per-mode sum ``3/8 N^4 + 3/4 N^3 + 1/8 N^2 - 1/4 N``
    converted to totals, i.e. its leading term is ``3/128 <N_t^4>``.
    """
    n_t, n2, n3, n4 = (float(x) for x in nt_k)
    lx2 = (n2 + 2.0 * n_t) / 8.0
    v_lx2 = 3.0 / 128.0 * n4 + 3.0 / 32.0 * n3 + 1.0 / 32.0 * n2 - 1.0 / 8.0 * n_t - lx2 * lx2
    return {"lx2": lx2, "lx_lz2_lx": lx2, "v_lx2": v_lx2}


def delta_phi_mz_at(nt_k: Sequence[float], phi: float) -> float:
    """``L_z^2`` sensitivity of the bare MZ at operating point ``phi``."""
    m = mz_spin_moments(nt_k)
    _positive(m["lx2"])
    d2 = 0.25 * (m["lx_lz2_lx"] + m["v_lx2"] * math.tan(phi) ** 2) / m["lx2"] ** 2
    return math.sqrt(d2)


def plain_asymptotic_bound(alpha: float, n_a: float, q: float) -> float:
    """Leading-order lower estimate of the squared plain sensitivity for ``F_b ~ alpha N_t^2``.

    Raises ``ValueError`` when ``2 (6 alpha - 1)(8 alpha^2 - 3) < 0`` (e.g. twin-Fock,
    ``alpha = 1/2``), where the leading-order radicand is not real.
    """
    _positive(n_a)
    radicand = 2.0 * (6.0 * alpha - 1.0) * (8.0 * alpha * alpha - 3.0)
    if radicand < 0:
        raise ValueError(f"leading-order radicand is negative for alpha={alpha}")
    return q**4 / (alpha * n_a * n_a) + (1.0 - q) * (math.sqrt(radicand) + 2.0 * (3.0 - 2.0 * alpha)) / (
        8.0 * alpha * alpha * n_a
    )


@lru_cache(maxsize=4)
def _jy_diagonals(size: int) -> tuple[np.ndarray, np.ndarray]:
    # [n, row] -> <row| J_y |row> and <row| J_y^2 |row> on sector n
    mean_tab = np.zeros((size, size))
    sq_tab = np.zeros((size, size))
    for n in range(size):
        _, jy, _ = _spin_operators.__wrapped__(n)
        mean_tab[n, : n + 1] = jy.diagonal().real
        sq_tab[n, : n + 1] = np.sum(np.abs(jy) ** 2, axis=1)
    return mean_tab, sq_tab


def qfi_pure_numeric(joint: JointSectorState, side: str = "acceptor") -> float:
    """``4 Var(J_y)`` (acceptor) or ``4 Var(L_y)`` (donor) for a pure post-transfer state.

    Only number-diagonal elements contribute because the generators conserve
    the donor (resp. acceptor) occupations; evaluated with explicit sector
    matrices.
    """
    if not joint.pure:
        raise NotPure("pure-state QFI requested for a mixed post-transfer state")
    if side not in ("acceptor", "donor"):
        raise ValueError("side must be 'acceptor' or 'donor'")
    k = joint.n_max + 1
    mean_tab, sq_tab = _jy_diagonals(2 * k - 1)

    first = 0.0
    second = 0.0
    for big_n in range(k):
        w = joint.weights[big_n]
        if w == 0:
            continue
        p = joint.conditional[big_n]
        pp = np.outer(p, p)  # [m1, m2]
        m = np.arange(big_n + 1)
        m1, m2 = np.meshgrid(m, m, indexing="ij")
        if side == "acceptor":
            n_sec, row = m1 + m2, m2
        else:
            n_sec, row = 2 * big_n - m1 - m2, big_n - m2
        first += w * np.sum(pp * mean_tab[n_sec, row])
        second += w * np.sum(pp * sq_tab[n_sec, row])
    return float(4.0 * (second - first * first))
