"""Number-correlated donor states ``sum_MN rho_MN |M, M><N, N|``.

Index convention: ``rho[M, N]`` is indexed by the occupation ``M`` of *each*
donor mode, so entry ``M`` carries total particle number ``2 M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BadTrace, NotPSD, OddTotal, TruncationOverflow

HARD_CAP = 4096
_STIRLING2 = {
    1: (1,),
    2: (1, 1),
    3: (1, 3, 1),
    4: (1, 7, 6, 1),
}


@dataclass(frozen=True, eq=False)
class NumberCorrelatedState:
    """Donor state with truncation metadata.

    Pure states keep their amplitudes ``c_M`` and build ``rho`` on demand;
    mixed states carry ``rho`` directly.  ``tail_mass`` is the probability
    discarded by truncation (zero for exact states).
    """

    populations: np.ndarray
    tail_mass: float = 0.0
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    amplitudes: np.ndarray | None = None
    matrix: np.ndarray | None = None

    @property
    def n_max(self) -> int:
        return len(self.populations) - 1

    @cached_property
    def rho(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        c = self.amplitudes
        out = np.outer(c, c.conj())
        out.setflags(write=False)
        return out

    @property
    def is_pure(self) -> bool:
        if self.amplitudes is not None:
            return True
        evals = np.linalg.eigvalsh(self.matrix)
        return bool(evals[-1] >= evals.sum() - 1e-10)

    def pure_amplitudes(self) -> np.ndarray:
        """Amplitudes ``c_M`` of a pure state (phase fixed by the largest entry)."""
        if self.amplitudes is not None:
            return self.amplitudes
        evals, evecs = np.linalg.eigh(self.matrix)
        return evecs[:, -1] * math.sqrt(max(evals[-1], 0.0))

    def to_json(self) -> dict:
        rho = self.rho
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "n_max": self.n_max,
            "tail_mass": self.tail_mass,
            "index_convention": "rho[M][N] multiplies |M,M><N,N|; M is the per-mode occupation",
            "rho": [[float(z.real), float(z.imag)] for z in rho.ravel()],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "NumberCorrelatedState":
        k = int(doc["n_max"]) + 1
        flat = np.asarray(doc["rho"], dtype=float)
        rho = (flat[:, 0] + 1j * flat[:, 1]).reshape(k, k)
        state = custom_state(rho, tail_mass=float(doc.get("tail_mass", 0.0)))
        return cls(
            populations=state.populations,
            tail_mass=state.tail_mass,
            kind=doc.get("kind", "custom"),
            params=dict(doc.get("params", {})),
            matrix=state.matrix,
        )


def _pure(amplitudes: np.ndarray, tail_mass: float, kind: str, params: dict) -> NumberCorrelatedState:
    amplitudes = np.asarray(amplitudes, dtype=complex)
    amplitudes.setflags(write=False)
    p = np.abs(amplitudes) ** 2
    p.setflags(write=False)
    return NumberCorrelatedState(p, tail_mass, kind, params, amplitudes=amplitudes)


def twin_fock(n_total: int) -> NumberCorrelatedState:
    """``|N/2, N/2>`` with ``N = n_total`` particles in total."""
    n_total = int(n_total)
    if n_total < 0:
        raise ValueError("n_total must be nonnegative")
    if n_total % 2:
        raise OddTotal(f"twin-Fock needs an even total, got {n_total}")
    c = np.zeros(n_total // 2 + 1, dtype=complex)
    c[-1] = 1.0
    return _pure(c, 0.0, "twin-fock", {"n_t": n_total})


def squeezed_truncation(r_mag: float, tail_tol: float) -> int:
    """Smallest per-mode cutoff whose discarded probability is at most ``tail_tol``."""
    x = math.tanh(r_mag) ** 2
    if x == 0.0:
        return 0
    n = max(0, math.ceil(math.log(tail_tol) / math.log(x)) - 1)
    while x ** (n + 1) > tail_tol:
        n += 1
    while n > 0 and x**n <= tail_tol:
        n -= 1
    return n


def squeezed_vacuum(
    r_mag: float, theta: float = 0.0, tail_tol: float = 1e-12, hard_cap: int = HARD_CAP
) -> NumberCorrelatedState:
    """Two-mode squeezed vacuum truncated by tail probability.

    ``c_N = sech|r| (-exp(-i theta) tanh|r|)^N``; the discarded weight
    ``tanh(r)^(2 (n_max + 1))`` is stored exactly.
    """
    if r_mag < 0:
        raise ValueError("r_mag must be nonnegative")
    if not 0.0 < tail_tol < 1.0:
        raise ValueError("tail_tol must lie in (0, 1)")
    n_max = squeezed_truncation(r_mag, tail_tol)
    if n_max > hard_cap:
        raise TruncationOverflow(f"squeezed state needs n_max={n_max} > cap {hard_cap}")
    t = math.tanh(r_mag)
    ratio = -np.exp(-1j * theta) * t
    c = (1.0 / math.cosh(r_mag)) * ratio ** np.arange(n_max + 1)
    tail = t ** (2 * (n_max + 1)) if t > 0 else 0.0
    return _pure(c, tail, "squeezed", {"r": float(r_mag), "theta": float(theta), "tail_tol": float(tail_tol)})


def squeezed_from_mean(n_t: float, theta: float = 0.0, tail_tol: float = 1e-12, hard_cap: int = HARD_CAP):
    """Squeezed vacuum with ``<N_t> = n_t`` (``n_t = 2 sinh^2 r``)."""
    return squeezed_vacuum(math.asinh(math.sqrt(n_t / 2.0)), theta, tail_tol, hard_cap)


def custom_state(rho, tail_mass: float = 0.0) -> NumberCorrelatedState:
    """Validate a user-supplied ``rho_MN``."""
    rho = np.array(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("rho must be a square matrix")
    if not np.allclose(rho, rho.conj().T, atol=1e-12, rtol=0.0):
        raise ValueError("rho must be Hermitian")
    rho = (rho + rho.conj().T) / 2.0
    evals = np.linalg.eigvalsh(rho)
    if evals[0] < -1e-10:
        raise NotPSD(f"smallest eigenvalue {evals[0]:.3e}")
    tr = float(np.trace(rho).real)
    if abs(tr + tail_mass - 1.0) > 1e-9:
        raise BadTrace(f"trace {tr!r} with tail {tail_mass!r} is not normalized")
    p = rho.diagonal().real.copy()
    p.setflags(write=False)
    rho.setflags(write=False)
    return NumberCorrelatedState(p, float(tail_mass), "custom", {}, matrix=rho)


def classical_state(populations) -> NumberCorrelatedState:
    """Diagonal state: number correlations with no coherence between sectors."""
    return custom_state(np.diag(np.asarray(populations, dtype=float)))


def _geometric_raw_moment(g: float, k: int) -> float:
    # E[G^k] for P(G=j) = (1-x) x^j, mean g; falling factorial moments are j! g^j
    if k == 0:
        return 1.0
    return sum(s * math.factorial(i + 1) * g ** (i + 1) for i, s in enumerate(_STIRLING2[k]))


def tail_moment(state: NumberCorrelatedState, k: int) -> float:
    """Contribution of the discarded squeezed tail to ``<N_t^k>`` (zero otherwise)."""
    if state.kind != "squeezed" or state.tail_mass == 0.0:
        return 0.0
    x = math.tanh(state.params["r"]) ** 2
    g = x / (1.0 - x)
    start = state.n_max + 1
    # memoryless: the tail is shifted geometric times x^(n_max + 1)
    shifted = sum(math.comb(k, j) * start ** (k - j) * _geometric_raw_moment(g, j) for j in range(k + 1))
    return state.tail_mass * 2**k * shifted


def nt_moments(state: NumberCorrelatedState, k: int) -> float:
    """``<N_t^k>`` for ``k`` in 1..4, including the analytic squeezed tail."""
    if k not in (1, 2, 3, 4):
        raise ValueError("k must be one of 1, 2, 3, 4")
    totals = 2.0 * np.arange(state.n_max + 1)
    return float(np.dot(state.populations, totals**k)) + tail_moment(state, k)


def nt_variance(state: NumberCorrelatedState) -> float:
    return nt_moments(state, 2) - nt_moments(state, 1) ** 2
