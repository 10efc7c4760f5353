"""Encoded qubit Hamiltonians for the spinless t-V and spinful Hubbard models.

Hopping on a directed edge is -(i/2)(E_ij Z_j + Z_i E_ij), built from the
edge operator E (X on the arrow tail, Y on the head, one aux letter when
an odd face borders the edge).  Everything reduces to weight <= 3
strings; occupation terms are diagonal.  One stabilizer per even face is
the cyclic edge-operator product around that face; on lattices where the
parity rule fixes total fermion parity there is one extra global
boundary constraint per spin copy.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .lattice import Lattice, fermion_parity_constraint
from .models import TV, Hubbard
from .pauli import PauliHamiltonian, PauliString, single

GROUP_NAMES = ("hop_xh", "hop_xv", "hop_yh", "hop_yv", "interaction")

_AUX_LETTER = {"h": "Y", "v": "X"}


class EncodingError(RuntimeError):
    pass


def edge_operator(lat: Lattice, i: int, j: int) -> PauliString:
    """Directed edge operator E_(i->j) on a single spin copy."""
    e = lat.edge_between(i, j)
    ops = [(e.tail, "X"), (e.head, "Y")]
    if e.aux is not None:
        ops.append((e.aux, _AUX_LETTER[e.kind]))
    k = 0 if e.sign > 0 else 2
    if (i, j) != (e.tail, e.head):
        k += 2  # reversed traversal flips the sign
    return PauliString.from_ops(lat.n_qubits_per_copy, ops, k)


def hopping_operator(lat: Lattice, i: int, j: int) -> PauliHamiltonian:
    """Encoded c†_i c_j + c†_j c_i for one edge: -(i/2)(E_ij Z_j + Z_i E_ij)."""
    n = lat.n_qubits_per_copy
    e = edge_operator(lat, i, j)
    h = PauliHamiltonian(n)
    for p in (e * single(n, j, "Z"), single(n, i, "Z") * e):
        h.add(-0.5, PauliString(n, p.x, p.z, (p.k + 1) % 4))
    return h


def _shift(p: PauliString, offset: int, n_total: int) -> PauliString:
    return PauliString(n_total, p.x << offset, p.z << offset, p.k)


def _assert_odd_face_loops(lat: Lattice):
    # structural self-check of the arrow conventions: the edge-operator
    # product around every odd face must be exactly +identity
    for f in lat.faces:
        if f.parity != "odd":
            continue
        loop = _face_loop(lat, f)
        if (loop.x, loop.z, loop.k) != (0, 0, 0):
            raise EncodingError(
                f"odd-face loop at ({f.fx},{f.fy}) is {loop}, not +I")


def _face_loop(lat: Lattice, f) -> PauliString:
    bl, br, tr, tl = f.corners
    loop = edge_operator(lat, bl, br)
    for a, b in ((br, tr), (tr, tl), (tl, bl)):
        loop = loop * edge_operator(lat, a, b)
    return loop


@lru_cache(maxsize=None)
def stabilizers(lat: Lattice) -> tuple:
    """One stabilizer per even face (single copy; spinful callers shift)."""
    _assert_odd_face_loops(lat)
    out = []
    for f in lat.faces:
        if f.parity != "even":
            continue
        s = _face_loop(lat, f)
        if not s.is_hermitian():
            raise EncodingError(f"face ({f.fx},{f.fy}) product has phase i")
        if s.weight > 8:
            raise EncodingError(f"stabilizer weight {s.weight} > 8")
        out.append(s)
    return tuple(out)


@lru_cache(maxsize=None)
def boundary_constraint(lat: Lattice) -> PauliString | None:
    """Global parity/gauge string on lattices that fix fermion parity.

    Z along the left column's bulk sites times X on the left column's
    odd-face auxiliaries.  Its logical eigenvalue is not fixed here; the
    subspace construction calibrates it against the free-fermion
    spectrum.
    """
    if fermion_parity_constraint(lat) != "even-only":
        return None
    ops = [(lat.site(0, y), "Z") for y in range(lat.ny)]
    ops += [
        (aux, "X")
        for (fx, fy), aux in sorted(lat.aux_index.items())
        if fx == 0
    ]
    return PauliString.from_ops(lat.n_qubits_per_copy, ops)


@dataclass
class EncodedModel:
    lattice: Lattice
    params: object                # TV or Hubbard
    hamiltonian: PauliHamiltonian
    stabilizers: tuple            # PauliString per even face per copy
    boundary_constraints: tuple   # global parity strings, possibly empty
    groups: dict                  # GROUP_NAMES -> tuple of measurable units

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n

    def group_sums(self) -> dict:
        """Each group collapsed to one PauliHamiltonian (noise scaling)."""
        out = {}
        for name, units in self.groups.items():
            total = PauliHamiltonian(self.n_qubits)
            for u in units:
                total = total + u
            out[name] = total
        return out


def _hop_group(kind: str, bulk_letter: str) -> str:
    return f"hop_{bulk_letter.lower()}{kind}"


def _add_hopping(groups, lat, t, offset, n_total):
    for e in lat.edges:
        hop = hopping_operator(lat, e.i, e.j)
        for c, p in hop.terms():
            name = _hop_group(e.kind, p.letter(e.i))
            unit = PauliHamiltonian(n_total)
            unit.add(-t * c, _shift(p, offset, n_total))
            if unit.num_terms:
                groups[name].append(unit)


def _density_product(n, qi, qj, coeff) -> PauliHamiltonian:
    # coeff * (I - Z_qi)(I - Z_qj): one measurable density-density unit
    unit = PauliHamiltonian(n)
    unit.add(coeff, PauliString.identity(n))
    unit.add(-coeff, single(n, qi, "Z"))
    unit.add(-coeff, single(n, qj, "Z"))
    unit.add(coeff, PauliString.from_ops(n, [(qi, "Z"), (qj, "Z")]))
    return unit


def _assemble(lat, params, groups, copies):
    n_total = lat.n_qubits
    h = PauliHamiltonian(n_total)
    for name in GROUP_NAMES:
        for unit in groups[name]:
            h = h + unit
    stabs = tuple(
        _shift(s, off, n_total) for off in copies for s in stabilizers(lat)
    )
    bc = boundary_constraint(lat)
    bcs = tuple(_shift(bc, off, n_total) for off in copies) if bc else ()
    frozen = {name: tuple(units) for name, units in groups.items()}
    return EncodedModel(lat, params, h, stabs, bcs, frozen)


def encode_tv(lat: Lattice, t: float, V: float) -> EncodedModel:
    if lat.spinful:
        raise EncodingError("t-V encoding expects a spinless lattice")
    n = lat.n_qubits
    groups = {name: [] for name in GROUP_NAMES}
    _add_hopping(groups, lat, t, 0, n)
    for e in lat.edges:
        unit = _density_product(n, e.i, e.j, V / 4)
        if unit.num_terms:
            groups["interaction"].append(unit)
    return _assemble(lat, TV(t, V), groups, (0,))


def encode_hubbard(lat: Lattice, t: float, U: float) -> EncodedModel:
    if not lat.spinful:
        raise EncodingError("Hubbard encoding expects a spinful lattice")
    n = lat.n_qubits
    per = lat.n_qubits_per_copy
    groups = {name: [] for name in GROUP_NAMES}
    for off in (0, per):
        _add_hopping(groups, lat, t, off, n)
    for i in range(lat.n_sites):
        unit = _density_product(n, i, i + per, U / 4)
        if unit.num_terms:
            groups["interaction"].append(unit)
    return _assemble(lat, Hubbard(t, U), groups, (0, per))


def measurement_groups(model: EncodedModel) -> dict:
    """Partition into 4 hopping sets plus the diagonal interaction set.

    Units within one set are simultaneously measurable: every pair of
    strings drawn from one set commutes.
    """
    return model.groups
