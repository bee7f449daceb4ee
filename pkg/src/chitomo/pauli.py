"""Symplectic bit-vector algebra for the n-qubit Pauli group.

A Pauli operator is identified, up to phase, by two n-bit masks: bit ``i`` of
``x_bits`` / ``z_bits`` records an X / Z factor on qubit ``i``.  Qubit 0 is
the leftmost character of the string form ("XIZ" puts X on qubit 0) and the
most significant tensor factor of the matrix form.  The representative matrix
of a label is the Hermitian tensor-product Pauli: a qubit with both bits set
contributes the standard Y.  Products of two representatives close up to a
power of i, which :func:`pauli_mul` tracks as an exponent mod 4.

The module also builds the partition of the 4**n labels into D+1 maximal
commuting classes (D = 2**n), one per mutually unbiased basis, using the
GF(2**n) symmetric-matrix construction with a fixed irreducible polynomial
per qubit count.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

# Dense-matrix operations (pauli_matrix and everything downstream) are capped
# here; symbolic bit-vector operations work far beyond.
DENSE_QUBIT_CAP = 6

# MUB classes need GF(2**n); the irreducible-polynomial table below limits n.
MUB_QUBIT_CAP = 12

_SINGLE_QUBIT = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
}

_CHAR_TO_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_TO_CHAR = {v: k for k, v in _CHAR_TO_BITS.items()}

# Per-qubit digit used for chi-matrix indexing: I=0, X=1, Y=2, Z=3.
_BITS_TO_DIGIT = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}
_DIGIT_TO_BITS = {v: k for k, v in _BITS_TO_DIGIT.items()}

# Lexicographically smallest irreducible polynomial of each degree over GF(2)
# (bit i = coefficient of x**i, constant term forced to 1).
_IRREDUCIBLE_POLY = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10000011,
    8: 0b100011011,
    9: 0b1000000011,
    10: 0b10000001001,
    11: 0b100000000101,
    12: 0b1000000001001,
}


class DenseCapError(ValueError):
    """Raised when an operation would require dense matrices beyond the cap."""


@dataclass(frozen=True)
class PauliLabel:
    """Phase-free n-qubit Pauli operator in symplectic form."""

    n: int
    x_bits: int
    z_bits: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qubit count must be >= 1, got {self.n}")
        mask = (1 << self.n) - 1
        if not 0 <= self.x_bits <= mask or not 0 <= self.z_bits <= mask:
            raise ValueError(f"bit masks out of range for n={self.n}")

    @classmethod
    def identity(cls, n: int) -> "PauliLabel":
        return cls(n, 0, 0)

    @classmethod
    def from_string(cls, s: str) -> "PauliLabel":
        """Parse a Pauli string such as "XIZ" (case-insensitive)."""
        s = s.strip().upper()
        if not s:
            raise ValueError("empty Pauli string")
        x = z = 0
        for i, ch in enumerate(s):
            try:
                xb, zb = _CHAR_TO_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli character {ch!r} in {s!r}") from None
            x |= xb << i
            z |= zb << i
        return cls(len(s), x, z)

    def to_string(self) -> str:
        return "".join(
            _BITS_TO_CHAR[(self.x_bits >> i) & 1, (self.z_bits >> i) & 1]
            for i in range(self.n)
        )

    def __str__(self) -> str:
        return self.to_string()

    @property
    def is_identity(self) -> bool:
        return self.x_bits == 0 and self.z_bits == 0

    @property
    def weight(self) -> int:
        """Number of non-identity tensor factors."""
        return (self.x_bits | self.z_bits).bit_count()


def label_index(a: PauliLabel) -> int:
    """Position of a label in the canonical operator-basis ordering.

    Per-qubit digits I=0, X=1, Y=2, Z=3; qubit 0 is the most significant
    digit.  The identity always sits at index 0.
    """
    idx = 0
    for i in range(a.n):
        idx = 4 * idx + _BITS_TO_DIGIT[(a.x_bits >> i) & 1, (a.z_bits >> i) & 1]
    return idx


def label_from_index(n: int, idx: int) -> PauliLabel:
    """Inverse of :func:`label_index`."""
    if not 0 <= idx < 4**n:
        raise ValueError(f"index {idx} out of range for n={n}")
    x = z = 0
    for i in reversed(range(n)):
        xb, zb = _DIGIT_TO_BITS[idx % 4]
        x |= xb << i
        z |= zb << i
        idx //= 4
    return PauliLabel(n, x, z)


def all_labels(n: int) -> list[PauliLabel]:
    """All 4**n labels in canonical index order."""
    return [label_from_index(n, i) for i in range(4**n)]


def _check_same_n(a: PauliLabel, b: PauliLabel) -> None:
    if a.n != b.n:
        raise ValueError(f"mismatched qubit counts: {a.n} vs {b.n}")


def pauli_mul(a: PauliLabel, b: PauliLabel) -> tuple[PauliLabel, int]:
    """Multiply two labels: returns (c, theta) with M(a) @ M(b) = i**theta * M(c).

    The phase exponent is relative to the Hermitian representative matrices
    of :func:`pauli_matrix`.
    """
    _check_same_n(a, b)
    c = PauliLabel(a.n, a.x_bits ^ b.x_bits, a.z_bits ^ b.z_bits)
    # i**(ya + yb - yc) from the per-factor Y phases, times (-1) for every
    # Z-past-X swap when concatenating the two operators.
    ya = (a.x_bits & a.z_bits).bit_count()
    yb = (b.x_bits & b.z_bits).bit_count()
    yc = (c.x_bits & c.z_bits).bit_count()
    swaps = (a.z_bits & b.x_bits).bit_count()
    theta = (ya + yb - yc + 2 * swaps) % 4
    return c, theta


def symplectic_product(a: PauliLabel, b: PauliLabel) -> int:
    """0 if the operators commute, 1 if they anticommute."""
    _check_same_n(a, b)
    return ((a.x_bits & b.z_bits).bit_count() + (a.z_bits & b.x_bits).bit_count()) & 1


def pauli_matrix(a: PauliLabel) -> np.ndarray:
    """Dense Hermitian representative matrix of a label (2**n x 2**n)."""
    if a.n > DENSE_QUBIT_CAP:
        raise DenseCapError(
            f"dense matrices limited to n <= {DENSE_QUBIT_CAP}, got n={a.n}"
        )
    m = np.ones((1, 1), dtype=complex)
    for i in range(a.n):
        m = np.kron(m, _SINGLE_QUBIT[(a.x_bits >> i) & 1, (a.z_bits >> i) & 1])
    return m


# ---------------------------------------------------------------------------
# GF(2**n) arithmetic (polynomial basis, elements as bit masks)

def _clmul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        b >>= 1
    return r


def _polymod(a: int, m: int) -> int:
    dm = m.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= m << (a.bit_length() - 1 - dm)
    return a


def gf_mul(a: int, b: int, n: int) -> int:
    """Multiply two GF(2**n) elements in the canonical polynomial basis."""
    return _polymod(_clmul(a, b), _IRREDUCIBLE_POLY[n])


def gf_trace(a: int, n: int) -> int:
    """Field trace GF(2**n) -> GF(2)."""
    t = 0
    p = a
    for _ in range(n):
        t ^= p
        p = gf_mul(p, p, n)
    return t & 1


# ---------------------------------------------------------------------------
# MUB commuting classes

@dataclass(frozen=True)
class MubClass:
    """One of the D+1 maximal commuting classes: base index and n generators."""

    J: int
    generators: tuple[PauliLabel, ...]

    @property
    def n(self) -> int:
        return self.generators[0].n


@functools.lru_cache(maxsize=None)
def _symmetric_matrix_columns(n: int, c: int) -> tuple[int, ...]:
    """Columns (as bit masks) of the symmetric matrix M[s][t] = tr(c x^s x^t)."""
    poly = _IRREDUCIBLE_POLY[n]
    # powers x^0 .. x^(2n-2) reduced mod poly
    powers = [_polymod(1 << e, poly) if e >= n else 1 << e for e in range(2 * n - 1)]
    cols = []
    for t in range(n):
        col = 0
        for s in range(n):
            col |= gf_trace(gf_mul(c, powers[s + t], n), n) << s
        cols.append(col)
    return tuple(cols)


@functools.lru_cache(maxsize=None)
def mub_class(n: int, J: int) -> MubClass:
    """The J-th maximal commuting class, computed on demand.

    J=0 is the computational class {Z_1, ..., Z_n}; class J >= 1 has
    generators with X on qubit i and the Z pattern given by column i of the
    symmetric GF(2**n) matrix for field element J-1 (so J=1 is the pure-X
    class).
    """
    if not 1 <= n <= MUB_QUBIT_CAP:
        raise ValueError(f"MUB classes supported for 1 <= n <= {MUB_QUBIT_CAP}")
    if not 0 <= J <= (1 << n):
        raise ValueError(f"base index J={J} out of range for n={n}")
    if J == 0:
        gens = tuple(PauliLabel(n, 0, 1 << i) for i in range(n))
    else:
        cols = _symmetric_matrix_columns(n, J - 1)
        gens = tuple(PauliLabel(n, 1 << i, cols[i]) for i in range(n))
    return MubClass(J, gens)


def mub_classes(n: int) -> list[MubClass]:
    """All D+1 commuting classes for n qubits."""
    return [mub_class(n, J) for J in range((1 << n) + 1)]


def commutation_vector(a: PauliLabel, cls: MubClass) -> int:
    """Bit mask p with bit i set iff ``a`` anticommutes with generator i."""
    if a.n != cls.n:
        raise ValueError(f"mismatched qubit counts: {a.n} vs {cls.n}")
    p = 0
    for i, g in enumerate(cls.generators):
        p |= symplectic_product(a, g) << i
    return p


def solve_label_from_constraints(
    class_a: MubClass, p_a: int, class_b: MubClass, p_b: int
) -> PauliLabel:
    """Unique label with commutation vector p_a w.r.t. class_a and p_b w.r.t. class_b.

    The 2n generators of two distinct classes span the symplectic space, so
    the 2n x 2n GF(2) system always has exactly one solution; a singular
    system indicates corrupted classes and raises RuntimeError.
    """
    if class_a.J == class_b.J:
        raise ValueError("constraint classes must be distinct")
    n = class_a.n
    if class_b.n != n:
        raise ValueError(f"mismatched qubit counts: {n} vs {class_b.n}")
    w = 2 * n
    # Unknown v packs x_bits in the low n bits and z_bits in the high n bits;
    # the equation for generator g reads <v, g.z | g.x> = p bit.
    rows = []
    for cls, p in ((class_a, p_a), (class_b, p_b)):
        for i, g in enumerate(cls.generators):
            rows.append(g.z_bits | (g.x_bits << n) | (((p >> i) & 1) << w))
    pivots: dict[int, int] = {}
    for col in range(w):
        bit = 1 << col
        idx = next((i for i, r in enumerate(rows) if r & bit), None)
        if idx is None:
            raise RuntimeError(
                "singular commutation-constraint system; MUB class generators "
                "failed to span the symplectic space"
            )
        piv = rows.pop(idx)
        rows = [r ^ piv if r & bit else r for r in rows]
        pivots = {c: (r ^ piv if r & bit else r) for c, r in pivots.items()}
        pivots[col] = piv
    v = 0
    for col, r in pivots.items():
        v |= ((r >> w) & 1) << col
    mask = (1 << n) - 1
    return PauliLabel(n, v & mask, v >> n)
