"""Sector-restricted representation of encoded operators.

Encoded Hamiltonians commute with every face stabilizer, with the
global boundary string on lattices whose parity rule fixes total
fermion parity, and with the occupation total of each spin copy.  The
simultaneous eigenspace (stabilizers at +1, boundary string at a
calibrated sign, fixed particle number) is spanned by product vectors

    |b> (x) |chi(b)>

where b runs over site-occupation bitmasks and chi(b) is the unique
auxiliary configuration compatible with the constraint signs of that
pattern.  Operators that respect the symmetries project exactly into
this span, so sector spectra and dynamics run at the fermionic
dimension rather than 2^n.  The auxiliary register never exceeds a few
qubits per odd face, and nothing here ever diagonalizes the full
register.

Spinful models factor into two single-copy problems coupled only by a
diagonal term; `restrict` returns a `KronOperator` holding the two
blocks and the diagonal so matrix-vector products stay cheap.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .encoder import (
    EncodedModel,
    EncodingError,
    boundary_constraint,
    encode_tv,
    stabilizers,
)
from .lattice import Lattice, build_lattice, fermion_parity_constraint
from .oracle import InvalidSector, occupation_masks
from .pauli import PauliHamiltonian, PauliString, commutator_norm, single


class SectorForbidden(ValueError):
    """The requested particle number has no logical sector."""


class DegenerateAux(RuntimeError):
    """Auxiliary constraints do not pin a unique configuration."""


class NonSymmetricOperator(ValueError):
    """Operator does not commute with the sector's symmetries."""


@dataclass(frozen=True)
class _Constraint:
    zmask: int          # bulk sites whose occupation parity sets the sign
    mult: int           # +1 for face constraints, calibrated boundary sign
    aux: PauliString    # operator on the auxiliary register alone


def _split_constraint(lat: Lattice, s: PauliString) -> tuple:
    nb = lat.n_sites
    bulk = (1 << nb) - 1
    if s.x & bulk:
        raise EncodingError("constraint acts off-diagonally on lattice sites")
    aux = PauliString(lat.n_aux, s.x >> nb, s.z >> nb, s.k)
    return s.z & bulk, aux


def _constraints(lat: Lattice, sigma: Optional[int]) -> tuple:
    out = []
    for s in stabilizers(lat):
        zmask, aux = _split_constraint(lat, s)
        out.append(_Constraint(zmask, 1, aux))
    bc = boundary_constraint(lat)
    if bc is not None:
        if sigma not in (1, -1):
            raise ValueError("lattice fixes fermion parity; boundary sign required")
        zmask, aux = _split_constraint(lat, bc)
        out.append(_Constraint(zmask, sigma, aux))
    return tuple(out)


def _chi_matrix(n_aux: int, constraints, uniq_signs: np.ndarray) -> np.ndarray:
    """One auxiliary eigenvector per distinct constraint signature.

    Each column is the image of a computational seed under the product
    of (I + s A)/2.  The aux parts A commute pairwise (the stabilizers
    do, and their site parts are diagonal), so any nonzero image lies
    in the joint eigenspace, and that space is one-dimensional when
    the constraints are independent.  A seed can still be orthogonal
    to the target space; such columns retry with the next seed.
    """
    adim = 1 << n_aux
    nsig = uniq_signs.shape[0]
    acts = []
    for con in constraints:
        rows, vals = con.aux.column_action()
        acts.append((rows, vals[rows]))  # XOR permutations invert themselves

    def sweep(block, colsel):
        for k, (rows, vinv) in enumerate(acts):
            w = block[rows]
            w *= vinv[:, None]
            w *= uniq_signs[colsel, k][None, :]
            block += w
            block *= 0.5
        return block

    V = np.zeros((adim, nsig), dtype=np.complex128)
    V[0, :] = 1.0
    V = sweep(V, np.arange(nsig))
    nrm = np.linalg.norm(V, axis=0)
    bad = np.nonzero(nrm <= 1e-6)[0]
    seed = 1
    while bad.size and seed < adim:
        block = np.zeros((adim, bad.size), dtype=np.complex128)
        block[seed, :] = 1.0
        block = sweep(block, bad)
        bn = np.linalg.norm(block, axis=0)
        hit = bn > 1e-6
        V[:, bad[hit]] = block[:, hit]
        nrm[bad[hit]] = bn[hit]
        bad = bad[~hit]
        seed += 1
    if bad.size:
        raise DegenerateAux("no auxiliary configuration satisfies the constraints")
    V /= nrm[None, :]
    # gauge: largest component of each column made real and positive
    lead = np.abs(V).argmax(axis=0)
    ph = V[lead, np.arange(nsig)]
    V *= (np.abs(ph) / ph)[None, :]
    return V


@dataclass(eq=False)
class SubspaceBasis:
    """Logical sector basis for one spin copy, ordered by ascending bitmask."""

    lattice: Lattice
    n_electrons: int
    boundary_sign: Optional[int]
    masks: np.ndarray        # (dim,) occupation bitmasks, ascending
    sig_ids: np.ndarray      # (dim,) column of `chis` paired with each mask
    chis: np.ndarray         # (2**n_aux, n_signatures)
    constraints: tuple

    def __post_init__(self):
        self._aux_scalars: dict = {}

    @property
    def dim(self) -> int:
        return self.masks.size

    def index_of(self, mask: int) -> int:
        pos = int(np.searchsorted(self.masks, mask))
        if pos >= self.dim or self.masks[pos] != mask:
            raise InvalidSector(f"pattern {mask:#x} is not in this sector")
        return pos

    def occupations(self) -> np.ndarray:
        """(dim, n_sites) array of 0/1 site occupations."""
        sites = np.arange(self.lattice.n_sites, dtype=np.int64)
        return ((self.masks[:, None] >> sites[None, :]) & 1).astype(np.int8)


@dataclass(eq=False)
class ProductBasis:
    """Joint basis of two spin copies; index iu * down.dim + id."""

    up: SubspaceBasis
    down: SubspaceBasis

    @property
    def dim(self) -> int:
        return self.up.dim * self.down.dim

    @property
    def sector(self) -> tuple:
        return (self.up.n_electrons, self.down.n_electrons)


_BASIS_CACHE: "OrderedDict" = OrderedDict()


def _build_copy(lat: Lattice, ne: int, sigma: Optional[int]) -> SubspaceBasis:
    key = (lat, ne, sigma)
    hit = _BASIS_CACHE.get(key)
    if hit is not None:
        _BASIS_CACHE.move_to_end(key)
        return hit
    masks = occupation_masks(lat.n_sites, ne)
    cons = _constraints(lat, sigma)
    if len(cons) != lat.n_aux:
        raise DegenerateAux(
            f"{len(cons)} constraints for {lat.n_aux} auxiliary qubits")
    if lat.n_aux == 0:
        sig_ids = np.zeros(masks.size, dtype=np.intp)
        chis = np.ones((1, 1), dtype=np.complex128)
    else:
        cols = []
        for con in cons:
            par = np.bitwise_count(masks & np.int64(con.zmask)).astype(np.int64) & 1
            cols.append(con.mult * (1 - 2 * par))
        signature = np.stack(cols, axis=1).astype(np.int8)
        uniq, sig_ids = np.unique(signature, axis=0, return_inverse=True)
        chis = _chi_matrix(lat.n_aux, cons, uniq)
    basis = SubspaceBasis(lat, ne, sigma, masks,
                          np.asarray(sig_ids).ravel(), chis, cons)
    _BASIS_CACHE[key] = basis
    if len(_BASIS_CACHE) > 8:
        _BASIS_CACHE.popitem(last=False)
    return basis


def _free_hopping_energy(lat: Lattice, ne: int) -> float:
    m = np.zeros((lat.n_sites, lat.n_sites))
    for e in lat.edges:
        m[e.i, e.j] = m[e.j, e.i] = -1.0
    lam = np.linalg.eigvalsh(m)
    return float(lam[:ne].sum())


def _lowest_eigenvalue(h) -> float:
    if h.shape[0] <= 256:
        return float(np.linalg.eigvalsh(h.toarray())[0])
    vals = spla.eigsh(h, k=1, which="SA", maxiter=10000,
                      return_eigenvectors=False)
    return float(vals.min())


_GAUGE: dict = {}


def boundary_gauge(lat: Lattice, ne: int) -> int:
    """Boundary-string sign of the physical sector.

    Fixed per lattice and filling by matching the pure-hopping ground
    energy of the candidate sector against free fermions.  +1 is
    checked first, so a lattice where both signs reproduce the spectrum
    settles on +1.
    """
    if lat.spinful:
        lat = build_lattice(lat.nx, lat.ny, spinful=False)
    key = (lat, ne)
    if key in _GAUGE:
        return _GAUGE[key]
    if fermion_parity_constraint(lat) != "even-only":
        raise ValueError("lattice has no boundary constraint to calibrate")
    target = _free_hopping_energy(lat, ne)
    tol = 1e-8 * max(1.0, abs(target))
    hfree = encode_tv(lat, 1.0, 0.0).hamiltonian
    chosen = None
    for sigma in (1, -1):
        cand = _build_copy(lat, ne, sigma)
        h = _restrict_copy(hfree, cand, check=False)
        if abs(_lowest_eigenvalue(h) - target) <= tol:
            chosen = sigma
            break
    if chosen is None:
        raise EncodingError(
            "neither boundary sign reproduces the free-fermion sector energy")
    _GAUGE[key] = chosen
    return chosen


def _sector_basis(lat: Lattice, ne: int) -> SubspaceBasis:
    mode = fermion_parity_constraint(lat)
    if mode == "degenerate":
        raise DegenerateAux("lattice constraints overdetermine the aux register")
    sigma = boundary_gauge(lat, ne) if mode == "even-only" else None
    return _build_copy(lat, ne, sigma)


def logical_basis(model: EncodedModel, sector):
    """Sector basis for an encoded model.

    Spinless models take an integer occupation; spinful models take an
    (n_up, n_down) pair and get a `ProductBasis`.  On lattices whose
    parity rule fixes total fermion parity, odd spinless occupations
    raise `SectorForbidden`.
    """
    lat = model.lattice
    if lat.spinful:
        try:
            nu, nd = sector
        except (TypeError, ValueError):
            raise InvalidSector("spinful sector must be an (n_up, n_down) pair")
        lat1 = build_lattice(lat.nx, lat.ny, spinful=False)
        return ProductBasis(_sector_basis(lat1, int(nu)),
                            _sector_basis(lat1, int(nd)))
    if not isinstance(sector, (int, np.integer)):
        raise InvalidSector("spinless sector must be an integer occupation")
    ne = int(sector)
    if not 0 <= ne <= lat.n_sites:
        raise InvalidSector(f"{ne} particles on {lat.n_sites} sites")
    if fermion_parity_constraint(lat) == "even-only" and ne % 2 == 1:
        raise SectorForbidden(
            f"{lat.nx}x{lat.ny} fixes even fermion parity; "
            f"occupation {ne} has no logical sector")
    return _sector_basis(lat, ne)


# -- operator restriction ---------------------------------------------------

def _coeff_scale(op: PauliHamiltonian) -> float:
    return max([1.0] + [abs(c) for c, _ in op.terms()])


def _copy_generators(lat: Lattice, with_boundary: bool):
    n = lat.n_qubits_per_copy
    gens = []
    for s in stabilizers(lat):
        gens.append(("a face stabilizer", PauliHamiltonian(n, [(1.0, s)])))
    if with_boundary:
        bc = boundary_constraint(lat)
        gens.append(("the boundary string", PauliHamiltonian(n, [(1.0, bc)])))
    num = PauliHamiltonian(n)
    for q in range(lat.n_sites):
        num.add(1.0, single(n, q, "Z"))
    gens.append(("the occupation total", num))
    return gens


def _check_symmetry(op: PauliHamiltonian, gens, tol: float):
    for name, g in gens:
        if commutator_norm(op, g) > tol:
            raise NonSymmetricOperator(f"operator does not commute with {name}")


def _finalize(rows, cols, vals, dim: int, scale: float) -> sp.csr_matrix:
    if rows:
        m = sp.coo_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim), dtype=np.complex128).tocsr()
    else:
        m = sp.csr_matrix((dim, dim), dtype=np.complex128)
    d = m - m.getH()
    err = np.abs(d.data).max() if d.nnz else 0.0
    if err > 1e-9 * scale:
        raise EncodingError(f"restricted matrix lost hermiticity ({err:.2e})")
    m = (m + m.getH()) * 0.5
    if m.nnz == 0 or np.abs(m.data.imag).max() <= 1e-13 * scale:
        m = sp.csr_matrix((m.data.real, m.indices, m.indptr), shape=m.shape)
    m.sum_duplicates()
    return m


def _restrict_copy(op: PauliHamiltonian, basis: SubspaceBasis,
                   check: bool = True) -> sp.csr_matrix:
    lat = basis.lattice
    if op.n != lat.n_qubits_per_copy:
        raise ValueError("operator register does not match the lattice")
    scale = _coeff_scale(op)
    if check:
        gens = _copy_generators(lat, basis.boundary_sign is not None)
        _check_symmetry(op, gens, 1e-9 * scale)
    nb = lat.n_sites
    bulk = (1 << nb) - 1
    masks = basis.masks
    dim = masks.size
    sig = basis.sig_ids
    chis = basis.chis
    cols0 = np.arange(dim)
    rows_l, cols_l, vals_l = [], [], []
    for c, p in op.terms():
        xb, zb = p.x & bulk, p.z & bulk
        xa, za = p.x >> nb, p.z >> nb
        phase = p.phase * (1j) ** (xb & zb).bit_count()
        zsigns = 1 - 2 * (np.bitwise_count(masks & np.int64(zb)).astype(np.int64) & 1)
        tgt = masks ^ np.int64(xb)
        pos = np.searchsorted(masks, tgt)
        pos = np.minimum(pos, dim - 1)
        ok = masks[pos] == tgt
        r, cl = pos[ok], cols0[ok]
        amp = (c * phase) * zsigns[ok].astype(np.complex128)
        if xa or za:
            ent = basis._aux_scalars.get((xa, za))
            if ent is None:
                arows, avals = PauliString(lat.n_aux, xa, za, 0).column_action()
                ent = (arows, avals[arows], {})
                basis._aux_scalars[(xa, za)] = ent
            arows, vinv, pairs = ent
            srv, scv = sig[r], sig[cl]
            scal = np.empty(r.size, dtype=np.complex128)
            for j in range(r.size):
                pk = (srv[j], scv[j])
                val = pairs.get(pk)
                if val is None:
                    # <chi_r| A |chi_c> with A applied through its
                    # self-inverse XOR permutation
                    val = np.vdot(chis[:, srv[j]], chis[arows, scv[j]] * vinv)
                    pairs[pk] = val
                scal[j] = val
            amp = amp * scal
        else:
            amp = amp * (sig[r] == sig[cl])
        rows_l.append(r)
        cols_l.append(cl)
        vals_l.append(amp)
    return _finalize(rows_l, cols_l, vals_l, dim, scale)


@dataclass(eq=False)
class KronOperator:
    """up (x) I + I (x) down + diagonal coupling, over a `ProductBasis`."""

    up: sp.spmatrix
    down: sp.spmatrix
    cross: np.ndarray    # (up.dim, down.dim)

    @property
    def dims(self) -> tuple:
        return self.cross.shape

    @property
    def shape(self) -> tuple:
        d = self.cross.shape[0] * self.cross.shape[1]
        return (d, d)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        du, dd = self.cross.shape
        psi = np.asarray(v).reshape(du, dd)
        out = self.up @ psi
        out += (self.down @ psi.T).T
        out += self.cross * psi
        return np.asarray(out).ravel()

    def __matmul__(self, v):
        return self.matvec(v)

    def to_linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator(self.shape, matvec=self.matvec,
                                   dtype=np.complex128)

    def dense(self) -> np.ndarray:
        du, dd = self.cross.shape
        dt = np.result_type(self.up.dtype, self.down.dtype, self.cross.dtype)
        m = np.kron(self.up.toarray(), np.eye(dd)).astype(dt)
        m += np.kron(np.eye(du), self.down.toarray())
        m += np.diag(self.cross.ravel())
        return m

    def diagonal(self) -> np.ndarray:
        d = self.up.diagonal()[:, None] + self.down.diagonal()[None, :]
        return (d + self.cross).ravel()

    def __add__(self, other: "KronOperator") -> "KronOperator":
        return KronOperator(self.up + other.up, self.down + other.down,
                            self.cross + other.cross)

    def __mul__(self, a: float) -> "KronOperator":
        return KronOperator(self.up * a, self.down * a, self.cross * a)

    __rmul__ = __mul__


def _shift_string(p: PauliString, off: int, n: int) -> PauliString:
    return PauliString(n, p.x << off, p.z << off, p.k)


def _product_generators(lat1: Lattice, with_boundary: bool):
    per = lat1.n_qubits_per_copy
    n2 = 2 * per
    gens = []
    for off, tag in ((0, "up"), (per, "down")):
        for s in stabilizers(lat1):
            gens.append((f"a {tag} stabilizer",
                         PauliHamiltonian(n2, [(1.0, _shift_string(s, off, n2))])))
        if with_boundary:
            bc = boundary_constraint(lat1)
            gens.append((f"the {tag} boundary string",
                         PauliHamiltonian(n2, [(1.0, _shift_string(bc, off, n2))])))
        num = PauliHamiltonian(n2)
        for q in range(lat1.n_sites):
            num.add(1.0, single(n2, q + off, "Z"))
        gens.append((f"the {tag} occupation total", num))
    return gens


def _restrict_product(op: PauliHamiltonian, basis: ProductBasis) -> KronOperator:
    lat1 = basis.up.lattice
    per = lat1.n_qubits_per_copy
    if op.n != 2 * per:
        raise ValueError("operator register does not match the spinful lattice")
    scale = _coeff_scale(op)
    gens = _product_generators(lat1, basis.up.boundary_sign is not None)
    _check_symmetry(op, gens, 1e-9 * scale)
    mask_per = (1 << per) - 1
    site_mask = (1 << lat1.n_sites) - 1
    uph = PauliHamiltonian(per)
    dnh = PauliHamiltonian(per)
    cross_terms = []
    for c, p in op.terms():
        lo = (p.x | p.z) & mask_per
        hi = (p.x | p.z) >> per
        if hi == 0:
            uph.add(c, PauliString(per, p.x, p.z, 0))
        elif lo == 0:
            dnh.add(c, PauliString(per, p.x >> per, p.z >> per, 0))
        else:
            if p.x != 0:
                raise NonSymmetricOperator(
                    "cross-copy terms must be diagonal")
            zl, zh = p.z & mask_per, p.z >> per
            if (zl & ~site_mask) or (zh & ~site_mask):
                raise NonSymmetricOperator(
                    "cross-copy terms may not touch auxiliary qubits")
            cross_terms.append((c, zl, zh))
    a = _restrict_copy(uph, basis.up, check=False)
    b = _restrict_copy(dnh, basis.down, check=False)
    cross = np.zeros((basis.up.dim, basis.down.dim))
    for c, zl, zh in cross_terms:
        su = 1 - 2 * (np.bitwise_count(basis.up.masks & np.int64(zl)).astype(np.int64) & 1)
        sd = 1 - 2 * (np.bitwise_count(basis.down.masks & np.int64(zh)).astype(np.int64) & 1)
        cross += c * np.outer(su, sd)
    return KronOperator(a, b, cross)


def restrict(op: PauliHamiltonian, basis):
    """Project a symmetry-respecting operator into a sector basis.

    Returns a sparse matrix for a single-copy basis and a
    `KronOperator` for a `ProductBasis`.  Operators that fail to
    commute with a stabilizer, the boundary string, or a copy's
    occupation total raise `NonSymmetricOperator`.
    """
    if isinstance(basis, ProductBasis):
        return _restrict_product(op, basis)
    return _restrict_copy(op, basis)


def _as_mask(occupied, n_sites: int) -> int:
    if isinstance(occupied, (int, np.integer)):
        mask = int(occupied)
    else:
        mask = 0
        for s in occupied:
            bit = 1 << int(s)
            if mask & bit:
                raise InvalidSector(f"site {s} occupied twice")
            mask |= bit
    if mask >> n_sites:
        raise InvalidSector("occupation pattern leaves the lattice")
    return mask


def embed_bulk_product_state(basis, occupied) -> np.ndarray:
    """Unit vector of an occupation pattern inside the sector basis.

    The sector vector |b> (x) |chi(b)> is a basis element, so the
    embedding is a coordinate vector.  Spinful bases take a pair of
    patterns (up, down); patterns may be site iterables or bitmasks.
    """
    if isinstance(basis, ProductBasis):
        pu, pd = occupied
        vu = embed_bulk_product_state(basis.up, pu)
        vd = embed_bulk_product_state(basis.down, pd)
        return np.kron(vu, vd)
    mask = _as_mask(occupied, basis.lattice.n_sites)
    if mask.bit_count() != basis.n_electrons:
        raise InvalidSector(
            f"pattern has {mask.bit_count()} particles; "
            f"sector holds {basis.n_electrons}")
    v = np.zeros(basis.dim, dtype=np.complex128)
    v[basis.index_of(mask)] = 1.0
    return v
