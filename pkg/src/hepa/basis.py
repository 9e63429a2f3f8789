"""Two-atom 2S + 2P product basis and its symmetry blocks.

Canonical ordering of the 54 product states is lexicographic in
``(arrangement, m_l, m_sa, m_sb)`` with arrangement ``"A"`` (atom A carries
the P excitation) before ``"B"`` and projections ascending from -1 to +1.
The quantization axis is the internuclear axis.

Phase conventions
-----------------
* Electronic inversion maps ``|A: P m_l, B: S; m_sa, m_sb>`` to
  ``-|A: S, B: P m_l; m_sb, m_sa>``: the excitation and the spins change
  atom and the p orbital contributes its parity -1.  With this choice
  ``(1 + w I_e)/sqrt(2) |A: S; B: P m_l> |S M_S>`` equals
  ``(|A: S; B: P m_l> - w (-1)^S |A: P m_l; B: S>) |S M_S> / sqrt(2)``.
* The reflection through a plane containing the axis acts on each orbital
  as ``|l m> -> (-1)^m |l -m>`` and on each spin as
  ``|s m> -> (-1)^(s-m) |s -m>``.  With it the Omega = 0 component of a
  5Sigma+ or 1Sigma+ state is ``+``, that of 3Sigma+ is ``-``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

PROJECTIONS = (-1, 0, 1)
DIM = 54
UNGERADE = -1
GERADE = +1


class BasisVector(NamedTuple):
    arrangement: str  # atom carrying the P excitation, "A" or "B"
    m_l: int
    m_sa: int
    m_sb: int

    @property
    def omega(self):
        return self.m_l + self.m_sa + self.m_sb


class HundState(NamedTuple):
    """Hund's case (a) state |2S+1 Lambda_{u/g}, M_S> over the product basis."""

    spin: int
    lam: int  # signed Lambda = m_l
    m_s: int
    parity: int  # +1 gerade, -1 ungerade
    vector: np.ndarray

    @property
    def omega(self):
        return self.lam + self.m_s

    @property
    def label(self):
        return hund_label(self.spin, abs(self.lam), self.parity)


def hund_label(spin, lam_abs, parity):
    name = "Sigma" if lam_abs == 0 else "Pi"
    return f"{2 * spin + 1}{name}_{'u' if parity == UNGERADE else 'g'}"


def clebsch_gordan(j1, m1, j2, m2, j, m):
    """<j1 m1 j2 m2 | j m> for integer angular momenta (Racah formula)."""
    if m1 + m2 != m or abs(m1) > j1 or abs(m2) > j2 or abs(m) > j:
        return 0.0
    if not abs(j1 - j2) <= j <= j1 + j2:
        return 0.0
    f = math.factorial
    norm = (2 * j + 1) * f(j + j1 - j2) * f(j - j1 + j2) * f(j1 + j2 - j) / f(j1 + j2 + j + 1)
    norm *= f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2)
    total = 0.0
    for k in range(0, j1 + j2 + j + 1):
        args = (k, j1 + j2 - j - k, j1 - m1 - k, j2 + m2 - k, j - j2 + m1 + k, j - j1 - m2 + k)
        if min(args) < 0:
            continue
        total += (-1) ** k / math.prod(f(a) for a in args)
    return math.sqrt(norm) * total


def build_product_basis():
    """The 54 product states in canonical order."""
    return [
        BasisVector(arr, ml, sa, sb)
        for arr, ml, sa, sb in itertools.product("AB", PROJECTIONS, PROJECTIONS, PROJECTIONS)
    ]


@lru_cache(maxsize=None)
def _index():
    return {b: i for i, b in enumerate(build_product_basis())}


def _angular_momentum(j):
    """(jz, j+, j-) for a single angular momentum j, basis m = -j..j."""
    ms = np.arange(-j, j + 1)
    jz = np.diag(ms.astype(float))
    jp = np.zeros((len(ms), len(ms)))
    for i, m in enumerate(ms[:-1]):
        jp[i + 1, i] = math.sqrt(j * (j + 1) - m * (m + 1))
    return jz, jp, jp.T.copy()


class Operators:
    """Angular-momentum and symmetry operators on the 54-dimensional space.

    Orbital operators act on the P atom; ``spin_a`` / ``spin_b`` act on the
    spins of atoms A and B.  Each attribute is a dense 54 x 54 array.
    """

    def __init__(self):
        basis = build_product_basis()
        index = _index()
        eye3 = np.eye(3)
        lz, lp, lm = _angular_momentum(1)

        def kron3(a, b, c):
            return np.kron(np.kron(a, b), c)

        def both(op):
            return np.kron(np.eye(2), op)

        self.lz = both(kron3(lz, eye3, eye3))
        self.lp = both(kron3(lp, eye3, eye3))
        self.lm = self.lp.T.copy()
        self.saz = both(kron3(eye3, lz, eye3))
        self.sap = both(kron3(eye3, lp, eye3))
        self.sbz = both(kron3(eye3, eye3, lz))
        self.sbp = both(kron3(eye3, eye3, lp))
        self.sz = self.saz + self.sbz
        self.sp = self.sap + self.sbp
        self.sm = self.sp.T.copy()
        self.l2 = self.lz @ self.lz + 0.5 * (self.lp @ self.lm + self.lm @ self.lp)
        self.s2 = self.sz @ self.sz + 0.5 * (self.sp @ self.sm + self.sm @ self.sp)
        self.omega = self.lz + self.sz

        # spin-orbit coupling of the excited atom with its own spin
        zero = np.zeros((27, 27))
        ls_a = kron3(lz, lz, eye3) + 0.5 * (kron3(lp, lm, eye3) + kron3(lm, lp, eye3))
        ls_b = kron3(lz, eye3, lz) + 0.5 * (kron3(lp, eye3, lm) + kron3(lm, eye3, lp))
        self.ls = np.block([[ls_a, zero], [zero, ls_b]])

        self.inversion = np.zeros((DIM, DIM))
        self.reflection = np.zeros((DIM, DIM))
        other = {"A": "B", "B": "A"}
        for b in basis:
            i = index[b]
            self.inversion[index[BasisVector(other[b.arrangement], b.m_l, b.m_sb, b.m_sa)], i] = -1.0
            phase = (-1) ** abs(b.m_l) * (-1) ** abs(1 - b.m_sa) * (-1) ** abs(1 - b.m_sb)
            self.reflection[index[BasisVector(b.arrangement, -b.m_l, -b.m_sa, -b.m_sb)], i] = phase


@lru_cache(maxsize=None)
def operators():
    return Operators()


@lru_cache(maxsize=None)
def hund_states():
    """All 54 Hund's case (a) states, ungerade first."""
    index = _index()
    states = []
    for parity in (UNGERADE, GERADE):
        for spin in (0, 1, 2):
            for m_s in range(-spin, spin + 1):
                for lam in PROJECTIONS:
                    vec = np.zeros(DIM)
                    for sa, sb in itertools.product(PROJECTIONS, PROJECTIONS):
                        c = clebsch_gordan(1, sa, 1, sb, spin, m_s)
                        if c == 0.0:
                            continue
                        vec[index[BasisVector("B", lam, sa, sb)]] += c / math.sqrt(2)
                        vec[index[BasisVector("A", lam, sa, sb)]] -= parity * (-1) ** spin * c / math.sqrt(2)
                    vec.setflags(write=False)
                    states.append(HundState(spin, lam, m_s, parity, vec))
    return tuple(states)


def symmetrize(basis=None):
    """Split the product space into (ungerade, gerade) subspaces.

    Returns two 54 x 27 arrays whose orthonormal columns are Hund's case (a)
    states of the respective inversion parity.
    """
    if basis is not None and len(basis) != DIM:
        raise ValueError("symmetrize expects the full 54-state product basis")
    states = hund_states()
    u = np.column_stack([h.vector for h in states if h.parity == UNGERADE])
    g = np.column_stack([h.vector for h in states if h.parity == GERADE])
    return u, g


@dataclass(frozen=True, eq=False)
class SymmetryBlock:
    """One Omega_{u/g}^(+/-) block.

    ``vectors`` is a 54 x d array of orthonormal columns; each column is a
    single Hund's case (a) label, recorded in ``labels``.
    """

    omega: int
    parity: int
    reflection: int | None
    vectors: np.ndarray
    labels: tuple

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def name(self):
        sign = {None: "", 1: "+", -1: "-"}[self.reflection]
        return f"{self.omega}{'u' if self.parity == UNGERADE else 'g'}{sign}"

    def __hash__(self):
        return hash((self.omega, self.parity, self.reflection))

    def __eq__(self, other):
        if not isinstance(other, SymmetryBlock):
            return NotImplemented
        return (self.omega, self.parity, self.reflection) == (other.omega, other.parity, other.reflection)

    def __repr__(self):
        return f"SymmetryBlock({self.name}, dim={self.dim})"


def _parse_parity(parity):
    if parity in ("u", UNGERADE):
        return UNGERADE
    if parity in ("g", GERADE):
        return GERADE
    raise ValueError(f"parity must be 'u' or 'g', got {parity!r}")


def _parse_reflection(reflection):
    if reflection in (None, "", 0):
        return None
    if reflection in ("+", 1):
        return 1
    if reflection in ("-", -1):
        return -1
    raise ValueError(f"reflection must be '+', '-' or None, got {reflection!r}")


@lru_cache(maxsize=None)
def block(parity, omega, reflection=None):
    """Symmetry block of the given parity ('u'/'g'), |Omega| and reflection.

    For Omega != 0 the +Omega representative is returned and ``reflection``
    must be None.  For Omega = 0 the reflection label is required.
    """
    parity = _parse_parity(parity)
    reflection = _parse_reflection(reflection)
    if omega < 0:
        raise ValueError("omega is |Omega| and must be non-negative")
    if omega != 0 and reflection is not None:
        raise ValueError("the reflection label only applies to Omega = 0")
    if omega == 0 and reflection is None:
        raise ValueError("Omega = 0 needs a reflection label '+' or '-'")

    sigma = operators().reflection
    columns, labels = [], []
    for h in hund_states():
        if h.parity != parity or h.omega != omega:
            continue
        if reflection is None:
            vec = h.vector
        else:
            if h.lam < 0:
                continue  # Pi partner is reached through the reflection
            vec = 0.5 * (h.vector + reflection * (sigma @ h.vector))
            norm = np.linalg.norm(vec)
            if norm < 1e-12:
                continue
            vec = vec / norm
        columns.append(np.array(vec))
        labels.append(hund_label(h.spin, abs(h.lam), h.parity))
    vectors = np.column_stack(columns)
    vectors.setflags(write=False)
    return SymmetryBlock(omega, parity, reflection, vectors, tuple(labels))


def ungerade_blocks():
    """All ungerade blocks: 0u+, 0u-, 1u, 2u, 3u."""
    return [block("u", 0, "+"), block("u", 0, "-")] + [block("u", om) for om in (1, 2, 3)]


def hund_a_decomposition(blk, eigenvector):
    """Squared projections of a block eigenvector onto Hund's (a) labels.

    ``eigenvector`` is given in block coordinates.  Returns a dict mapping
    labels such as ``"5Pi_u"`` to weights that sum to one.
    """
    vec = np.asarray(eigenvector, dtype=float)
    full = blk.vectors @ (vec / np.linalg.norm(vec))
    weights = {}
    for h in hund_states():
        if h.parity == blk.parity:
            weights[h.label] = weights.get(h.label, 0.0) + float(h.vector @ full) ** 2
    return weights
