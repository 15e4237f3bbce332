"""Exact signal moments and phase sensitivities from conditional moments.

Every expectation reduces to ``sum_N p_N <N1^a>_N <N1^b>_N`` times a
trigonometric coefficient; the coefficients live in ``_moment_table`` and are
regenerated symbolically by :mod:`irmz.derive`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._moment_table import TABLE
from .channels import BranchChannel, JointSectorState
from .errors import DegenerateSignal, NoParticles

RECYCLED = "recycled"
PLAIN = "plain"


@dataclass(frozen=True)
class SignalMoments:
    mean: float
    second: float
    variance: float
    dmean_dphi: float
    phi: float
    signal_kind: str


@dataclass(frozen=True)
class SensitivityReport:
    delta_phi: float
    phi_opt: float
    n_a: float
    bound_heisenberg: float
    qcrb: float | None = None


def _compile(table: dict) -> dict:
    out = {}
    for name, (basis, terms) in table.items():
        arr = np.array([(a, b, i, k) for a, b, i, k, _, _ in terms], dtype=int).reshape(-1, 4)
        coef = np.array([num / den for *_, num, den in terms], dtype=float)
        out[name] = (basis, arr, coef)
    return out


_COMPILED = _compile(TABLE)


def _trig(basis: str, phi: float) -> tuple[float, float, float]:
    s = math.sin(phi)
    c = math.cos(phi)
    # cos(phi) - 1 without cancellation
    t = -2.0 * math.sin(phi / 2.0) ** 2 if basis == "u" else c
    return t, s, c


def evaluate(name: str, pair: np.ndarray, phi: float = 0.0) -> float:
    """Value of a tabulated quantity for pair moments ``pair[a, b]``."""
    basis, idx, coef = _COMPILED[name]
    t, s, _ = _trig(basis, phi)
    vals = coef * t ** idx[:, 2] * s ** idx[:, 3] * pair[idx[:, 0], idx[:, 1]]
    return float(vals.sum())


def evaluate_derivative(name: str, pair: np.ndarray, phi: float) -> float:
    """Analytic ``d/dphi`` of :func:`evaluate`."""
    basis, idx, coef = _COMPILED[name]
    t, s, c = _trig(basis, phi)
    i = idx[:, 2].astype(float)
    k = idx[:, 3].astype(float)
    # dt/dphi = -sin for both bases; ds/dphi = cos
    dt = np.where(i > 0, i * t ** np.maximum(idx[:, 2] - 1, 0), 0.0) * (-s) * s ** idx[:, 3]
    ds = np.where(k > 0, k * s ** np.maximum(idx[:, 3] - 1, 0), 0.0) * c * t ** idx[:, 2]
    return float((coef * (dt + ds) * pair[idx[:, 0], idx[:, 1]]).sum())


def conditional_moments(channel: BranchChannel, n: int) -> tuple[float, float, float, float]:
    """First four moments of ``P_{.|n}``."""
    if n > channel.n_max:
        raise ValueError(f"n={n} exceeds channel n_max {channel.n_max}")
    p = channel.conditional[n]
    occ = np.arange(n + 1, dtype=float)
    return tuple(float(p @ occ**k) for k in (1, 2, 3, 4))


def _signal_moments(joint: JointSectorState, phi: float, kind: str) -> SignalMoments:
    pair = joint.pair_moments
    mean = evaluate(f"{kind}_mean", pair, phi)
    second = evaluate(f"{kind}_second", pair, phi)
    return SignalMoments(
        mean=mean,
        second=second,
        variance=second - mean * mean,
        dmean_dphi=evaluate_derivative(f"{kind}_mean", pair, phi),
        phi=float(phi),
        signal_kind=kind,
    )


def recycled_moments(joint: JointSectorState, phi: float) -> SignalMoments:
    """Moments of ``S = (J_z(phi) + L_z)^2``."""
    return _signal_moments(joint, phi, RECYCLED)


def plain_moments(joint: JointSectorState, phi: float) -> SignalMoments:
    """Moments of ``S = J_z(phi)^2``."""
    return _signal_moments(joint, phi, PLAIN)


def signal_moments(joint: JointSectorState, phi: float, recycled: bool) -> SignalMoments:
    return _signal_moments(joint, phi, RECYCLED if recycled else PLAIN)


def spin_moments(joint: JointSectorState) -> dict[str, float]:
    """Acceptor pseudo-spin moments at the transfer time (before the interferometer)."""
    pair = joint.pair_moments
    names = ("jz2", "jx2", "jy2", "jz4", "jx4", "jz2jx2_sym", "anti2")
    return {name: evaluate(name, pair) for name in names}


def delta_phi_at(joint: JointSectorState, phi: float, recycled: bool) -> float:
    """Error-propagation sensitivity ``sqrt(V(S)) / |d<S>/dphi|`` at ``phi``."""
    m = signal_moments(joint, phi, recycled)
    if m.dmean_dphi == 0.0:
        return math.inf
    return math.sqrt(max(m.variance, 0.0)) / abs(m.dmean_dphi)


def _acceptor_number(joint: JointSectorState) -> float:
    n_a = joint.acceptor_mean()
    if not n_a > 1e-300:
        raise NoParticles("no acceptor particles; sensitivity undefined")
    return n_a


def recycled_sensitivity(joint: JointSectorState) -> SensitivityReport:
    """Recycled-signal sensitivity at its optimum ``phi = 0`` (analytic limit)."""
    n_a = _acceptor_number(joint)
    sm = spin_moments(joint)
    delta = math.sqrt(sm["jy2"]) / (2.0 * sm["jx2"])
    qcrb = 1.0 / math.sqrt(4.0 * sm["jy2"]) if joint.pure else None
    return SensitivityReport(delta, 0.0, n_a, math.sqrt(2.0 / (n_a * (n_a + 2.0))), qcrb)


def plain_sensitivity(joint: JointSectorState) -> SensitivityReport:
    """Plain-signal sensitivity at its optimal operating point."""
    n_a = _acceptor_number(joint)
    sm = spin_moments(joint)
    denom = sm["jz2"] - sm["jx2"]
    if abs(denom) <= 1e-12:
        raise DegenerateSignal("<J_z^2> = <J_x^2>: the mean signal does not depend on phi")
    var_z = max(sm["jz4"] - sm["jz2"] ** 2, 0.0)
    var_x = max(sm["jx4"] - sm["jx2"] ** 2, 0.0)
    cov = sm["jz2jx2_sym"] - 2.0 * sm["jz2"] * sm["jx2"]
    if var_x == 0.0:
        raise DegenerateSignal("V(J_x^2) vanishes")
    phi_opt = math.atan((var_z / var_x) ** 0.25)
    d2 = (2.0 * math.sqrt(var_z * var_x) + cov + sm["anti2"]) / (4.0 * denom**2)
    qcrb = 1.0 / math.sqrt(4.0 * sm["jy2"]) if joint.pure else None
    return SensitivityReport(math.sqrt(d2), phi_opt, n_a, math.sqrt(2.0 / (n_a * (n_a + 2.0))), qcrb)
