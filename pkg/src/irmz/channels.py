"""Number-conserving, branch-symmetric state-transfer channels.

One branch maps ``|M,0><N,0|`` (donor, acceptor) to
``sum_mn A[M,m,N,n] |M-m,m><N-n,n|``.  ``sigma[N][m, n] = A[N,m,N,n]`` is the
branch output for ``N`` donor particles and ``P_{n|N}`` is its diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.stats import binom

from .errors import BadEfficiency, ChoiNotPSD, NotPositive, NotTracePreserving, TruncationMismatch
from .states import NumberCorrelatedState


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BranchChannel:
    """Per-branch transfer map.

    Exactly one backing representation is set: ``kraus`` (per-sector Kraus
    rows, ``A_MN = kraus[M].T @ kraus[N].conj()``), ``tensor`` (dense
    ``A[M, m, N, n]``), ``sectors`` (diagonal blocks only; cross-sector
    blocks are zero) or ``diagonal`` (fully dephased: only ``P_{n|N}``).  Sectors are built on demand so large cutoffs stay cheap.
    """

    n_max: int
    kind: str
    q: float | None = None
    kraus: tuple | None = None
    tensor: np.ndarray | None = None
    sectors: tuple | None = None
    diagonal: tuple | None = None

    def sector(self, n: int) -> np.ndarray:
        """``sigma^(N)[m, n] = A[N, m, N, n]``."""
        if self.diagonal is not None:
            return np.diag(self.diagonal[n]).astype(complex)
        if self.sectors is not None:
            return self.sectors[n]
        return self.a_block(n, n)

    @property
    def sigma(self) -> tuple:
        return tuple(self.sector(n) for n in range(self.n_max + 1))

    @cached_property
    def conditional(self) -> tuple:
        """``P_{n|N}`` for each ``N``."""
        if self.diagonal is not None:
            return self.diagonal
        if self.kraus is not None:
            return tuple(_freeze(np.sum(np.abs(kr) ** 2, axis=0)) for kr in self.kraus)
        return tuple(_freeze(self.sector(n).diagonal().real.copy()) for n in range(self.n_max + 1))

    def a_block(self, m_total: int, n_total: int) -> np.ndarray:
        """Matrix ``A[M, m, N, n]`` over ``m = 0..M``, ``n = 0..N``."""
        if self.tensor is not None:
            return self.tensor[m_total, : m_total + 1, n_total, : n_total + 1]
        if self.kraus is not None:
            return self.kraus[m_total].T @ self.kraus[n_total].conj()
        if m_total == n_total:
            return self.sector(n_total)
        return np.zeros((m_total + 1, n_total + 1), dtype=complex)

    def a_tensor(self) -> np.ndarray:
        k = self.n_max + 1
        out = np.zeros((k, k, k, k), dtype=complex)
        for big_m in range(k):
            for big_n in range(k):
                out[big_m, : big_m + 1, big_n, : big_n + 1] = self.a_block(big_m, big_n)
        return out

    def choi(self, sectors=None) -> np.ndarray:
        """Sector-restricted Choi matrix ``sum_MN |M><N| (x) A_MN``."""
        sectors = list(range(self.n_max + 1)) if sectors is None else list(sectors)
        return np.block([[self.a_block(m, n) for n in sectors] for m in sectors])

    def coherent_on(self, sectors) -> bool:
        """True when the map is a single Kraus operator on the given sectors."""
        sectors = list(sectors)
        if self.kraus is not None and self.kraus[0].shape[0] == 1:
            return True
        if self.tensor is None and len(sectors) > 1:
            return False
        evals = np.linalg.eigvalsh(self.choi(sectors))
        return bool(evals[:-1].sum() <= 1e-10 * max(evals[-1], 1.0) and np.all(evals[:-1] > -1e-10))

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "n_max": self.n_max}
        if self.q is not None:
            doc["q"] = self.q
        doc["sectors"] = [
            {"N": n, "sigma": [[float(z.real), float(z.imag)] for z in s.ravel()]}
            for n, s in ((n, self.sector(n)) for n in range(self.n_max + 1))
        ]
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "BranchChannel":
        n_max = int(doc["n_max"])
        if doc.get("kind") == "beamsplitter" and "q" in doc:
            ch = beamsplitter_channel(float(doc["q"]), n_max)
            if "sectors" in doc:
                loaded = _sectors_from_json(doc["sectors"], n_max)
                for a, b in zip(loaded, ch.sigma):
                    if not np.allclose(a, b, atol=1e-12, rtol=0.0):
                        raise ValueError("beamsplitter sectors disagree with q")
            return ch
        sectors = _sectors_from_json(doc["sectors"], n_max)
        return channel_from_sectors(sectors, kind=doc.get("kind", "custom"))


def _sectors_from_json(items, n_max: int) -> list:
    out = [None] * (n_max + 1)
    for item in items:
        n = int(item["N"])
        flat = np.asarray(item["sigma"], dtype=float)
        out[n] = (flat[:, 0] + 1j * flat[:, 1]).reshape(n + 1, n + 1)
    if any(s is None for s in out):
        raise ValueError("missing sectors in channel document")
    return out


def _check_sectors(sigma, tol_trace=1e-12, tol_psd=1e-10) -> None:
    for n, s in enumerate(sigma):
        if s.shape != (n + 1, n + 1):
            raise ValueError(f"sector {n} has shape {s.shape}")
        tr = np.trace(s).real
        if abs(tr - 1.0) > tol_trace:
            raise NotTracePreserving(f"sector {n}: sum_n P_n|N = {tr!r}")
        if not np.allclose(s, s.conj().T, atol=1e-12, rtol=0.0):
            raise NotPositive(f"sector {n}: sigma is not Hermitian")
        lo = np.linalg.eigvalsh(s)[0]
        if lo < -tol_psd:
            raise NotPositive(f"sector {n}: smallest eigenvalue {lo:.3e}")


def beamsplitter_amplitudes(q: float, n_total: int) -> np.ndarray:
    """``beta_{Nn} = (-i)^n sqrt(C(N,n) q^n (1-q)^(N-n))``."""
    n = np.arange(n_total + 1)
    return (-1j) ** n * np.sqrt(binom.pmf(n, n_total, q))


def beamsplitter_channel(q: float, n_max: int) -> BranchChannel:
    """Linear beamsplitter transfer with efficiency ``q``."""
    q = float(q)
    if not 0.0 <= q <= 1.0 or math.isnan(q):
        raise BadEfficiency(f"q must lie in [0, 1], got {q}")
    kraus = tuple(_freeze(beamsplitter_amplitudes(q, n)[None, :]) for n in range(n_max + 1))
    return BranchChannel(int(n_max), "beamsplitter", q=q, kraus=kraus)


def dephase(channel: BranchChannel) -> BranchChannel:
    """Keep only ``A[N,n,N,n]``; conditional distributions are untouched."""
    return BranchChannel(channel.n_max, "dephased", q=channel.q, diagonal=channel.conditional)


def channel_from_sectors(sigma, kind: str = "custom") -> BranchChannel:
    """Channel known only by its sectors (no coherence between sectors)."""
    sigma = [np.array(s, dtype=complex) for s in sigma]
    _check_sectors(sigma)
    sigma = tuple(_freeze((s + s.conj().T) / 2.0) for s in sigma)
    return BranchChannel(len(sigma) - 1, kind, sectors=sigma)


def custom_channel(a_tensor, check_choi: bool = False) -> BranchChannel:
    """Validate a dense ``A[M, m, N, n]`` tensor of shape ``(K, K, K, K)``."""
    a = np.array(a_tensor, dtype=complex)
    if a.ndim != 4 or len(set(a.shape)) != 1:
        raise ValueError("a_tensor must have shape (K, K, K, K)")
    k = a.shape[0]
    idx = np.arange(k)
    outside = (idx[None, :] > idx[:, None])[:, :, None, None] | (idx[None, :] > idx[:, None])[None, None, :, :]
    if np.any(np.abs(a[outside]) > 0):
        raise ValueError("a_tensor has weight outside 0 <= m <= M, 0 <= n <= N")
    sigma = [a[n, : n + 1, n, : n + 1] for n in range(k)]
    _check_sectors(sigma)
    ch = BranchChannel(k - 1, "custom", tensor=_freeze(a))
    if check_choi:
        choi = ch.choi()
        if not np.allclose(choi, choi.conj().T, atol=1e-12, rtol=0.0):
            raise ChoiNotPSD("Choi matrix is not Hermitian")
        lo = np.linalg.eigvalsh(choi)[0]
        if lo < -1e-9:
            raise ChoiNotPSD(f"Choi matrix has eigenvalue {lo:.3e}")
    return ch


def random_channel(n_max: int, seed: int, rank: int | None = None) -> BranchChannel:
    """Random valid channel: per sector, random pure states mixed with random weights.

    The same Kraus index runs across sectors, so cross-sector blocks are
    generically nonzero.  Deterministic in ``seed``.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, 5)) if rank is None else int(rank)
    kraus = []
    for n in range(n_max + 1):
        w = rng.dirichlet(np.ones(r))
        v = rng.normal(size=(r, n + 1)) + 1j * rng.normal(size=(r, n + 1))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        kraus.append(_freeze(np.sqrt(w)[:, None] * v))
    return BranchChannel(int(n_max), "custom", kraus=tuple(kraus))


@dataclass(frozen=True, eq=False)
class JointSectorState:
    """Post-transfer state ``sum_N p_N sigma_N (x) sigma_N`` (diagonal sector blocks).

    Both branches share ``channel``'s sectors; ``sigma(N)`` builds one on demand.
    """

    weights: np.ndarray
    channel: BranchChannel
    tail_mass: float = 0.0
    pure: bool = False

    @property
    def n_max(self) -> int:
        return len(self.weights) - 1

    def sigma(self, n: int) -> np.ndarray:
        return self.channel.sector(n)

    @property
    def conditional(self) -> tuple:
        return self.channel.conditional[: self.n_max + 1]

    @cached_property
    def conditional_table(self) -> np.ndarray:
        """``table[N, k] = <N1^k>_N`` for ``k = 0..4``."""
        out = np.zeros((self.n_max + 1, 5))
        for n, p in enumerate(self.conditional):
            occ = np.arange(n + 1, dtype=float)
            out[n] = [p.sum(), p @ occ, p @ occ**2, p @ occ**3, p @ occ**4]
        return _freeze(out)

    @cached_property
    def pair_moments(self) -> np.ndarray:
        """``E[a, b] = sum_N p_N <N1^a>_N <N1^b>_N``."""
        mu = self.conditional_table
        return _freeze(np.einsum("n,na,nb->ab", self.weights, mu, mu))

    def acceptor_mean(self) -> float:
        """``N_a = <N1 + N2>``."""
        return 2.0 * float(self.pair_moments[0, 1])


def apply(channel: BranchChannel, donor: NumberCorrelatedState) -> JointSectorState:
    """Push a donor state through both (identical) branches."""
    if donor.n_max > channel.n_max:
        raise TruncationMismatch(f"donor n_max {donor.n_max} exceeds channel n_max {channel.n_max}")
    weights = np.asarray(donor.populations, dtype=float)
    pure = False
    if donor.is_pure:
        populated = [n for n in range(donor.n_max + 1) if weights[n] > 0]
        pure = channel.coherent_on(populated) if populated else True
    return JointSectorState(_freeze(weights.copy()), channel, donor.tail_mass, pure)
