"""Two-mode Fock-sector operators.

A sector with ``n_total`` bosons has basis ``|n_total - row, row>`` for
``row = 0..n_total``: row 0 puts every particle in mode 1.  All operators
here are dense ``(n_total + 1)``-square matrices on one such sector; nothing
ever lives on a global Fock space.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.linalg import expm


@lru_cache(maxsize=512)
def _spin_operators(n_total: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if n_total < 0:
        raise ValueError("n_total must be nonnegative")
    rows = np.arange(n_total + 1)
    n1 = n_total - rows
    jz = np.diag((n1 - rows) / 2.0).astype(complex)
    # a1^dag a2 moves row -> row - 1
    raise_amp = np.sqrt((n1[1:] + 1.0) * rows[1:])
    jplus = np.zeros((n_total + 1, n_total + 1), dtype=complex)
    jplus[rows[:-1], rows[1:]] = raise_amp
    jminus = jplus.conj().T
    jx = (jplus + jminus) / 2.0
    jy = (jplus - jminus) / 2.0j
    for op in (jx, jy, jz):
        op.setflags(write=False)
    return jx, jy, jz


def build_spin_operators(n_total: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(J_x, J_y, J_z)`` with ``J_k = a^dag sigma_k a / 2`` on the sector.

    The arrays are shared and read-only; copy before mutating.
    """
    return _spin_operators(int(n_total))


@lru_cache(maxsize=256)
def _rotation(n_total: int, phi: float) -> np.ndarray:
    _, jy, _ = _spin_operators(n_total)
    out = expm(-1j * phi * jy)
    out.setflags(write=False)
    return out


def mz_rotation(n_total: int, phi: float) -> np.ndarray:
    """Mach-Zehnder unitary ``U = exp(-i phi J_y)`` on one sector.

    Satisfies ``U^dag J_z U = J_z cos(phi) - J_x sin(phi)``.
    """
    phi = float(phi)
    if not np.isfinite(phi):
        raise ValueError("phi must be finite")
    return _rotation(int(n_total), phi)


def output_distribution(n_total: int, phi: float) -> np.ndarray:
    """``P[k2, m2] = |<n-k2, k2| U(phi) |n-m2, m2>|^2``; columns sum to one."""
    u = mz_rotation(n_total, phi)
    return np.abs(u) ** 2


def is_unitary(u: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=atol, rtol=0.0))
