"""Monte Carlo four-port counting and method-of-moments phase estimation.

Randomness comes from the counter-based Philox generator: shot ``i`` of a
run with seed ``s`` always consumes counter block ``i`` under key ``s``, so
any chunking of the shots reproduces the same records.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterator
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect

from .channels import JointSectorState
from .errors import NonMonotone
from .fock import output_distribution
from .moments import delta_phi_at, evaluate, evaluate_derivative, RECYCLED, PLAIN

CSV_HEADER = ("shot", "N", "d1", "d2", "k1", "k2", "signal")
PHI_HI = math.pi / 2.0


class MeasurementRecord(NamedTuple):
    d1: int
    d2: int
    k1: int
    k2: int


@dataclass(frozen=True, eq=False)
class Records:
    """Column-oriented batch of shots; ``n`` is the sampled donor sector."""

    n: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    start: int = 0

    def __len__(self) -> int:
        return len(self.n)

    def __iter__(self) -> Iterator[MeasurementRecord]:
        for row in zip(self.d1.tolist(), self.d2.tolist(), self.k1.tolist(), self.k2.tolist()):
            yield MeasurementRecord(*row)

    def __getitem__(self, sl: slice) -> "Records":
        if not isinstance(sl, slice):
            raise TypeError("Records supports slicing only")
        first = sl.indices(len(self))[0]
        return Records(self.n[sl], self.d1[sl], self.d2[sl], self.k1[sl], self.k2[sl], self.start + first)

    @staticmethod
    def concatenate(parts) -> "Records":
        parts = list(parts)
        cols = [np.concatenate([getattr(p, c) for p in parts]) for c in ("n", "d1", "d2", "k1", "k2")]
        return Records(*cols, start=parts[0].start if parts else 0)

    def write_csv(self, fh, recycled: bool) -> None:
        sig = signals(self, recycled)
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i in range(len(self)):
            writer.writerow(
                (self.start + i, int(self.n[i]), int(self.d1[i]), int(self.d2[i]),
                 int(self.k1[i]), int(self.k2[i]), f"{sig[i]:.17g}")
            )


def shot_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Four uniforms per shot for shots ``start .. start + count - 1``."""
    bitgen = np.random.Philox(key=int(seed))
    bitgen.advance(int(start))
    return np.random.Generator(bitgen).random((int(count), 4))


def _inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    return np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), len(probs) - 1)


def sample_counts(joint: JointSectorState, phi: float, shots: int, seed: int, start: int = 0) -> Records:
    """Sample donor and output-port counts.

    Sector ``N ~ p_N``; transferred numbers ``m_j ~ P_{.|N}`` independently;
    donor counts ``d_j = N - m_j``; output ``(k1, k2)`` from
    ``|<k1,k2|U(phi)|m1,m2>|^2``.  Truncated weight is renormalized away.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    u = shot_uniforms(seed, start, shots)
    big_n = _inverse_cdf(np.asarray(joint.weights), u[:, 0])
    m1 = np.empty(shots, dtype=np.int64)
    m2 = np.empty(shots, dtype=np.int64)
    for n in np.unique(big_n):
        sel = big_n == n
        p = joint.conditional[n]
        m1[sel] = _inverse_cdf(p, u[sel, 1])
        m2[sel] = _inverse_cdf(p, u[sel, 2])
    n_acc = m1 + m2
    k2 = np.empty(shots, dtype=np.int64)
    for n in np.unique(n_acc):
        dist = output_distribution(int(n), phi)
        sel_n = n_acc == n
        for col in np.unique(m2[sel_n]):
            sel = sel_n & (m2 == col)
            k2[sel] = _inverse_cdf(dist[:, col], u[sel, 3])
    return Records(big_n.astype(np.int64), big_n - m1, big_n - m2, n_acc - k2, k2, int(start))


def signal_from_record(rec: MeasurementRecord, recycled: bool) -> float:
    """``[(k1-k2)/2 + (d1-d2)/2]^2`` when recycled, ``[(k1-k2)/2]^2`` otherwise."""
    jz = (rec.k1 - rec.k2) / 2.0
    if recycled:
        jz += (rec.d1 - rec.d2) / 2.0
    return jz * jz


def signals(records: Records, recycled: bool) -> np.ndarray:
    jz = (records.k1 - records.k2) / 2.0
    if recycled:
        jz = jz + (records.d1 - records.d2) / 2.0
    return jz * jz


class SignalCurve:
    """Analytic ``<S>(phi)`` on ``(0, pi/2)`` for inversion."""

    def __init__(self, joint: JointSectorState, recycled: bool, grid: int = 513):
        self.joint = joint
        self.recycled = recycled
        self.name = f"{RECYCLED if recycled else PLAIN}_mean"
        self.pair = joint.pair_moments
        phis = np.linspace(0.0, PHI_HI, grid)[1:-1]
        slopes = np.array([evaluate_derivative(self.name, self.pair, p) for p in phis])
        scale = np.max(np.abs(slopes))
        if scale == 0.0 or not (np.all(slopes > -1e-12 * scale) or np.all(slopes < 1e-12 * scale)):
            raise NonMonotone("<S>(phi) is not monotone on (0, pi/2)")
        self.increasing = bool(np.sum(slopes) > 0)

    def mean(self, phi: float) -> float:
        return evaluate(self.name, self.pair, phi)

    def invert(self, target: float, xtol: float = 1e-12) -> tuple[float, bool]:
        """Solve ``<S>(phi) = target``; returns ``(phi, clamped)``."""
        lo_val, hi_val = self.mean(0.0), self.mean(PHI_HI)
        if not self.increasing:
            lo_val, hi_val = hi_val, lo_val
        if target <= lo_val:
            return (0.0 if self.increasing else PHI_HI), True
        if target >= hi_val:
            return (PHI_HI if self.increasing else 0.0), True
        phi = bisect(lambda p: self.mean(p) - target, 0.0, PHI_HI, xtol=xtol, maxiter=200)
        return float(phi), False


def estimate_phase(records: Records, joint: JointSectorState, recycled: bool, curve: SignalCurve | None = None) -> float:
    """Method-of-moments estimate: the ``phi`` whose ``<S>`` equals the sample mean."""
    if len(records) == 0:
        raise ValueError("no records to estimate from")
    curve = curve or SignalCurve(joint, recycled)
    return curve.invert(float(np.mean(signals(records, recycled))))[0]


@dataclass(frozen=True, eq=False)
class EstimationRun:
    phi_true: float
    shots_per_estimate: int
    n_estimates: int
    seed: int
    recycled: bool
    estimates: np.ndarray
    rmse: float
    predicted: float
    clamped: int

    @property
    def ratio(self) -> float:
        return self.rmse / self.predicted

    def summary(self) -> dict:
        return {
            "phi_true": self.phi_true,
            "rmse": self.rmse,
            "predicted": self.predicted,
            "ratio": self.ratio,
            "shots_per_estimate": self.shots_per_estimate,
            "n_estimates": self.n_estimates,
            "seed": self.seed,
            "signal": RECYCLED if self.recycled else PLAIN,
            "clamped": self.clamped,
        }


def empirical_sensitivity(
    joint: JointSectorState,
    phi_true: float,
    shots_per_estimate: int,
    n_estimates: int,
    seed: int,
    recycled: bool,
    records: Records | None = None,
    check_interval: bool = True,
) -> EstimationRun:
    """Repeat the estimate over independent batches and compare with error propagation.

    Batch ``j`` uses shots ``j * shots_per_estimate`` onward; pass ``records``
    to reuse an existing sample (e.g. to pair the two signals).
    """
    if shots_per_estimate < 1 or n_estimates < 1:
        raise ValueError("shots_per_estimate and n_estimates must be positive")
    curve = SignalCurve(joint, recycled)
    predicted = delta_phi_at(joint, phi_true, recycled) / math.sqrt(shots_per_estimate)
    if check_interval and not (3.0 * predicted <= phi_true <= PHI_HI - 3.0 * predicted):
        raise ValueError("phi_true must sit at least 3 predicted standard errors inside (0, pi/2)")
    total = shots_per_estimate * n_estimates
    if records is None:
        records = sample_counts(joint, phi_true, total, seed)
    elif len(records) < total:
        raise ValueError("not enough records for the requested batches")
    batch_means = signals(records[:total], recycled).reshape(n_estimates, shots_per_estimate).mean(axis=1)
    estimates = np.empty(n_estimates)
    clamped = 0
    for i, target in enumerate(batch_means):
        estimates[i], hit = curve.invert(float(target))
        clamped += hit
    rmse = float(np.sqrt(np.mean((estimates - phi_true) ** 2)))
    return EstimationRun(float(phi_true), int(shots_per_estimate), int(n_estimates), int(seed),
                         bool(recycled), estimates, rmse, predicted, clamped)
