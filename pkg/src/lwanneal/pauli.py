"""Pauli strings and real-coefficient Pauli-sum Hamiltonians.

A string is stored symplectically: bitmasks ``x`` and ``z`` over qubits
(qubit 0 is the least significant bit of a computational basis index)
plus an explicit unit phase i^k.  The letter on qubit q is read from the
bit pair (x_q, z_q): I=(0,0), X=(1,0), Y=(1,1), Z=(0,1), and the
operator is phase * (tensor product of those literal letters).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)
_PHASE_LABEL = {0: "+", 1: "+i", 2: "-", 3: "-i"}

_LETTER_TO_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_TO_LETTER = {v: k for k, v in _LETTER_TO_BITS.items()}

_TERM_RE = re.compile(r"([XYZ])(\d+)")


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    n: int
    x: int = 0
    z: int = 0
    k: int = 0  # phase exponent, operator = i^k * letters

    def __post_init__(self):
        if self.n < 0 or self.n > 64:
            raise ValueError(f"unsupported qubit count {self.n}")
        mask = (1 << self.n) - 1
        if (self.x & ~mask) or (self.z & ~mask):
            raise ValueError("support mask exceeds qubit count")
        object.__setattr__(self, "k", self.k % 4)

    @classmethod
    def from_ops(cls, n: int, ops, k: int = 0) -> "PauliString":
        """Build from (qubit, letter) pairs, e.g. [(0, "X"), (6, "Y")]."""
        x = z = 0
        for q, letter in ops:
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for n={n}")
            bx, bz = _LETTER_TO_BITS[letter]
            if ((x | z) >> q) & 1:
                raise ValueError(f"qubit {q} assigned twice")
            x |= bx << q
            z |= bz << q
        return cls(n, x, z, k)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0, 0)

    @property
    def phase(self) -> complex:
        return _PHASES[self.k]

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def support(self) -> tuple:
        m = self.x | self.z
        return tuple(q for q in range(self.n) if (m >> q) & 1)

    def letter(self, q: int) -> str:
        return _BITS_TO_LETTER[((self.x >> q) & 1, (self.z >> q) & 1)]

    def bare(self) -> "PauliString":
        """Same letters, phase reset to +1."""
        return PauliString(self.n, self.x, self.z, 0)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ValueError("qubit count mismatch")
        x = self.x ^ other.x
        z = self.z ^ other.z
        # i^k bookkeeping through the XZ normal form of each factor
        dk = (
            _popcount(self.x & self.z)
            + _popcount(other.x & other.z)
            + 2 * _popcount(self.z & other.x)
            - _popcount(x & z)
        )
        return PauliString(self.n, x, z, (self.k + other.k + dk) % 4)

    def commutes(self, other: "PauliString") -> bool:
        if self.n != other.n:
            raise ValueError("qubit count mismatch")
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def dagger(self) -> "PauliString":
        return PauliString(self.n, self.x, self.z, (-self.k) % 4)

    def is_hermitian(self) -> bool:
        return self.k in (0, 2)

    def column_action(self):
        """Vectorized action on all 2^n basis columns.

        Returns (rows, vals): column b maps to rows[b] with amplitude
        vals[b].  Each column has exactly one nonzero entry.
        """
        dim = 1 << self.n
        cols = np.arange(dim, dtype=np.uint64)
        rows = cols ^ np.uint64(self.x)
        signs = 1.0 - 2.0 * (
            np.bitwise_count(cols & np.uint64(self.z)).astype(np.int64) & 1
        )
        vals = (self.phase * (1j) ** _popcount(self.x & self.z)) * signs
        return rows.astype(np.int64), vals.astype(np.complex128)

    def to_sparse(self) -> sp.csr_matrix:
        dim = 1 << self.n
        rows, vals = self.column_action()
        cols = np.arange(dim, dtype=np.int64)
        return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def apply(self, vec: np.ndarray) -> np.ndarray:
        rows, vals = self.column_action()
        out = np.zeros(len(vec), dtype=np.complex128)
        out[rows] = vals * vec
        return out

    def label(self, with_phase: bool = True) -> str:
        body = " ".join(f"{self.letter(q)}{q}" for q in self.support) or "I"
        if not with_phase:
            return body
        return (_PHASE_LABEL[self.k] + " " + body) if self.k else body

    def __str__(self):
        return self.label()


def single(n: int, q: int, letter: str) -> PauliString:
    return PauliString.from_ops(n, [(q, letter)])


class PauliHamiltonian:
    """Real linear combination of Pauli strings on a fixed register.

    Phases of added strings are folded into the coefficients; a term
    whose folded coefficient is not real is rejected (the container is
    for Hermitian operators only).  Duplicate strings merge.
    """

    def __init__(self, n: int, terms=None):
        self.n = n
        self._coeffs: dict = {}  # (x, z) -> float
        if terms is not None:
            for coeff, string in terms:
                self.add(coeff, string)

    def add(self, coeff, string: PauliString) -> "PauliHamiltonian":
        if string.n != self.n:
            raise ValueError("qubit count mismatch")
        c = complex(coeff) * string.phase
        if abs(c.imag) > 1e-12 * max(1.0, abs(c.real)):
            raise ValueError(f"non-real coefficient {c} for {string.label(False)}")
        key = (string.x, string.z)
        new = self._coeffs.get(key, 0.0) + c.real
        if new == 0.0:
            self._coeffs.pop(key, None)
        else:
            self._coeffs[key] = new
        return self

    def terms(self):
        """Yield (coeff, PauliString with phase +1), canonically ordered."""
        for x, z in sorted(self._coeffs, key=self._term_sort_key):
            yield self._coeffs[(x, z)], PauliString(self.n, x, z, 0)

    def _term_sort_key(self, key):
        x, z = key
        string = PauliString(self.n, x, z, 0)
        return (string.support, tuple(string.letter(q) for q in string.support))

    @property
    def num_terms(self) -> int:
        return len(self._coeffs)

    def coeff(self, string: PauliString) -> float:
        if string.k not in (0, 2):
            raise ValueError("lookup string must carry a real phase")
        sign = 1.0 if string.k == 0 else -1.0
        return sign * self._coeffs.get((string.x, string.z), 0.0)

    def __add__(self, other: "PauliHamiltonian") -> "PauliHamiltonian":
        if other.n != self.n:
            raise ValueError("qubit count mismatch")
        out = PauliHamiltonian(self.n)
        out._coeffs = dict(self._coeffs)
        for (x, z), c in other._coeffs.items():
            new = out._coeffs.get((x, z), 0.0) + c
            if new == 0.0:
                out._coeffs.pop((x, z), None)
            else:
                out._coeffs[(x, z)] = new
        return out

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        out = PauliHamiltonian(self.n)
        s = float(scalar)
        if s != 0.0:
            out._coeffs = {k: s * c for k, c in self._coeffs.items()}
        return out

    __rmul__ = __mul__

    def to_sparse(self) -> sp.csr_matrix:
        dim = 1 << self.n
        if not self._coeffs:
            return sp.csr_matrix((dim, dim), dtype=np.complex128)
        cols = np.arange(dim, dtype=np.int64)
        row_parts, val_parts = [], []
        for c, string in self.terms():
            rows, vals = string.column_action()
            row_parts.append(rows)
            val_parts.append(c * vals)
        mat = sp.coo_matrix(
            (np.concatenate(val_parts),
             (np.concatenate(row_parts), np.tile(cols, len(row_parts)))),
            shape=(dim, dim),
        )
        return mat.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def commutes_with(self, string: PauliString) -> bool:
        return all(term.commutes(string) for _, term in self.terms())

    def format(self, precision: int = 12) -> str:
        lines = []
        for c, string in self.terms():
            lines.append(f"{c:.{precision}g} * {string.label(with_phase=False)}")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, n: int, text: str) -> "PauliHamiltonian":
        """Parse lines of the form ``-0.5 * X0 X1 Y6`` (I for identity)."""
        out = cls(n)
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            coeff_part, _, ops_part = line.partition("*")
            coeff = float(coeff_part)
            ops_part = ops_part.strip()
            if ops_part in ("", "I"):
                out.add(coeff, PauliString.identity(n))
                continue
            ops = [(int(q), letter) for letter, q in _TERM_RE.findall(ops_part)]
            if len(ops) != len(ops_part.split()):
                raise ValueError(f"unparseable term line: {raw!r}")
            out.add(coeff, PauliString.from_ops(n, ops))
        return out

    def __str__(self):
        return self.format()

    def __eq__(self, other):
        if not isinstance(other, PauliHamiltonian) or other.n != self.n:
            return NotImplemented
        keys = set(self._coeffs) | set(other._coeffs)
        return all(
            abs(self._coeffs.get(k, 0.0) - other._coeffs.get(k, 0.0)) <= 1e-12
            for k in keys
        )

    def allclose(self, other: "PauliHamiltonian", tol: float = 1e-10) -> bool:
        keys = set(self._coeffs) | set(other._coeffs)
        return all(
            abs(self._coeffs.get(k, 0.0) - other._coeffs.get(k, 0.0)) <= tol
            for k in keys
        )


def commutator_norm(a: PauliHamiltonian, b: PauliHamiltonian) -> float:
    """Largest coefficient magnitude in [a, b], computed symbolically."""
    if a.n != b.n:
        raise ValueError("qubit count mismatch")
    acc: dict = {}
    for ca, pa in a.terms():
        for cb, pb in b.terms():
            if pa.commutes(pb):
                continue
            prod = pa * pb  # anticommuting pair: [pa, pb] = 2 pa pb
            key = (prod.x, prod.z)
            acc[key] = acc.get(key, 0.0) + 2.0 * ca * cb * prod.phase
    return max(abs(v) for v in acc.values()) if acc else 0.0
