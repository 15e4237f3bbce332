"""Symbolic derivation of the conditional-moment table used by :mod:`irmz.moments`.

Every signal moment is an expectation of a word in acceptor pseudo-spin
operators on a two-mode Fock state ``|m1, m2>`` (with the donor pseudo-spin
replaced by its eigenvalue ``-(m1 - m2)/2``).  Words are expanded into ladder
operators and evaluated as closed walks, which yields exact polynomials in
``m1`` and ``m2``.  Averaging over independent, identically distributed
branch occupations turns ``m1**a * m2**b`` into ``<N1^a>_N <N1^b>_N``.

Run ``python -m irmz.derive`` to regenerate ``_moment_table.py``.  Requires
sympy, which is only needed here and in the test that checks the frozen table.
"""

from __future__ import annotations

import sys
from collections import Counter

import sympy as sp

m1, m2, c, s, u = sp.symbols("m1 m2 c s u")


def _mul(left: dict, right: dict) -> dict:
    out: dict = {}
    for wl, cl in left.items():
        for wr, cr in right.items():
            w = wl + wr
            out[w] = out.get(w, 0) + cl * cr
    return out


def _add(*ops: dict) -> dict:
    out: dict = {}
    for op in ops:
        for w, cf in op.items():
            out[w] = out.get(w, 0) + cf
    return out


def _scale(op: dict, k) -> dict:
    return {w: k * cf for w, cf in op.items()}


def _power(op: dict, k: int) -> dict:
    out = {(): sp.Integer(1)}
    for _ in range(k):
        out = _mul(out, op)
    return out


JZ = {("Z",): sp.Integer(1)}
JX = {("P",): sp.Rational(1, 2), ("M",): sp.Rational(1, 2)}
JY = {("P",): -sp.I / 2, ("M",): sp.I / 2}
JZ_EIG = (m1 - m2) / 2


def _edge_weight(e: int):
    # |<o+1| a1^dag a2 |o>|^2 where |o> = |m1 + o, m2 - o>
    return (m1 + e + 1) * (m2 - e)


def word_expectation(word: tuple) -> sp.Expr:
    """<m1, m2| word |m1, m2> for a word over Z (J_z), P (a1^dag a2), M (a2^dag a1)."""
    offset = 0
    amp = sp.Integer(1)
    edges: Counter = Counter()
    for letter in reversed(word):
        if letter == "Z":
            amp *= JZ_EIG + offset
        elif letter == "P":
            edges[offset] += 1
            offset += 1
        elif letter == "M":
            offset -= 1
            edges[offset] += 1
        else:
            raise ValueError(letter)
    if offset != 0:
        return sp.Integer(0)
    for e, n in edges.items():
        amp *= _edge_weight(e) ** (n // 2)
    return amp


def expectation(op: dict) -> sp.Expr:
    return sp.expand(sum((cf * word_expectation(w) for w, cf in op.items()), sp.Integer(0)))


def _signal(recycled: bool) -> dict:
    trig_c = 1 + u if recycled else c
    rotated = _add(_scale(JZ, trig_c), _scale(JX, -s))
    if recycled:
        rotated = _add(rotated, {(): -JZ_EIG})
    return _power(rotated, 2)


def quantities() -> dict[str, tuple[str, sp.Expr]]:
    """Name -> (trig basis, polynomial in m1, m2 and the trig symbols)."""
    out = {}
    for name, recycled in (("recycled", True), ("plain", False)):
        sig = _signal(recycled)
        basis = "u" if recycled else "c"
        out[f"{name}_mean"] = (basis, expectation(sig))
        out[f"{name}_second"] = (basis, expectation(_power(sig, 2)))
    z2 = _power(JZ, 2)
    x2 = _power(JX, 2)
    anti = _add(_mul(JX, JZ), _mul(JZ, JX))
    out["jz2"] = ("c", expectation(z2))
    out["jx2"] = ("c", expectation(x2))
    out["jy2"] = ("c", expectation(_power(JY, 2)))
    out["jz4"] = ("c", expectation(_power(z2, 2)))
    out["jx4"] = ("c", expectation(_power(x2, 2)))
    out["jz2jx2_sym"] = ("c", expectation(_add(_mul(z2, x2), _mul(x2, z2))))
    out["anti2"] = ("c", expectation(_mul(anti, anti)))
    return out


def to_terms(basis: str, expr: sp.Expr) -> list[tuple[int, int, int, int, int, int]]:
    """Flatten to (a, b, i, k, num, den) with a <= b: coeff * t^i * s^k * E[mu_a mu_b]."""
    t = u if basis == "u" else c
    poly = sp.Poly(expr, m1, m2, t, s)
    merged: dict = {}
    for (a, b, i, k), cf in poly.terms():
        key = (min(a, b), max(a, b), i, k)
        merged[key] = merged.get(key, 0) + cf
    terms = []
    for key in sorted(merged):
        cf = sp.Rational(merged[key])
        if cf != 0:
            terms.append((*key, int(cf.p), int(cf.q)))
    return terms


def render() -> str:
    lines = [
        '"""Conditional-moment coefficient table. Generated by ``python -m irmz.derive``; do not edit."""',
        "",
        "# name -> (trig basis, [(a, b, i, k, num, den), ...])",
        "# term value: num/den * t**i * sin(phi)**k * sum_N p_N <N1^a>_N <N1^b>_N",
        "# with t = cos(phi) for basis 'c' and t = cos(phi) - 1 for basis 'u'",
        "TABLE = {",
    ]
    for name, (basis, expr) in quantities().items():
        lines.append(f"    {name!r}: ({basis!r}, [")
        for term in to_terms(basis, expr):
            lines.append(f"        {term!r},")
        lines.append("    ]),")
    lines.append("}")
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    sys.stdout.write(render())
