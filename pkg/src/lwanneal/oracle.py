"""Occupation-number-basis exact diagonalization, the ground-truth solver.

Fermionic modes are ordered by site index (row-major), with the full
spin-up block before the spin-down block in the spinful case.  Matrix
elements carry Jordan-Wigner-style parity signs in that fixed mode
order; the convention is deliberately independent of the encoder so the
spectra comparison between the two is a meaningful test.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import Lattice
from .models import TV, Hubbard

DENSE_CUTOFF = 4096


class NonConvergence(RuntimeError):
    pass


class InvalidSector(ValueError):
    pass


def occupation_masks(n_sites: int, n_particles: int):
    """All n_sites-bit masks with n_particles bits set, ascending."""
    if not 0 <= n_particles <= n_sites:
        raise InvalidSector(f"{n_particles} particles on {n_sites} sites")
    masks = [
        sum(1 << s for s in occ)
        for occ in combinations(range(n_sites), n_particles)
    ]
    return np.array(sorted(masks), dtype=np.int64)


class FermionBasis:
    """Fixed-particle-number occupation basis.

    Spinless: states are site-occupation bitmasks, ascending.  Spinful:
    states are (mask_up, mask_down) pairs, ascending lexicographically,
    so the joint index is iu * dim_down + id.
    """

    def __init__(self, n_sites: int, sector):
        self.n_sites = n_sites
        self.sector = sector
        if isinstance(sector, tuple):
            n_up, n_down = sector
            self.up = occupation_masks(n_sites, n_up)
            self.down = occupation_masks(n_sites, n_down)
            self.dim = len(self.up) * len(self.down)
            self.spinful = True
        else:
            self.states = occupation_masks(n_sites, sector)
            self.dim = len(self.states)
            self.spinful = False
            self._index = {int(m): i for i, m in enumerate(self.states)}

    def index(self, mask: int) -> int:
        return self._index[int(mask)]


def _parity_between(mask: int, i: int, j: int) -> int:
    """(-1)^(# occupied modes strictly between i and j)."""
    a, b = (i, j) if i < j else (j, i)
    between = ((1 << b) - 1) & ~((1 << (a + 1)) - 1)
    return -1 if bin(mask & between).count("1") % 2 else 1


def _hop_matrix(lat: Lattice, basis, t: float) -> sp.csr_matrix:
    """-t Σ_edges (c†_i c_j + h.c.) on a spinless occupation basis."""
    rows, cols, vals = [], [], []
    for col, mask in enumerate(basis.states):
        m = int(mask)
        for e in lat.edges:
            bi, bj = (m >> e.i) & 1, (m >> e.j) & 1
            if bi == bj:
                continue
            target = m ^ (1 << e.i) ^ (1 << e.j)
            rows.append(basis.index(target))
            cols.append(col)
            vals.append(-t * _parity_between(m, e.i, e.j))
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))


def _nn_repulsion_diag(lat: Lattice, basis, V: float) -> np.ndarray:
    diag = np.zeros(basis.dim)
    for col, mask in enumerate(basis.states):
        m = int(mask)
        diag[col] = V * sum(
            1 for e in lat.edges if (m >> e.i) & (m >> e.j) & 1
        )
    return diag


def fermion_hamiltonian(lat: Lattice, model, sector) -> sp.csr_matrix:
    """Sector Hamiltonian as a sparse matrix over FermionBasis ordering."""
    basis = FermionBasis(lat.n_sites, sector)
    if isinstance(model, TV):
        if basis.spinful:
            raise InvalidSector("t-V model is spinless")
        h = _hop_matrix(lat, basis, model.t)
        h += sp.diags(_nn_repulsion_diag(lat, basis, model.V))
        return h.tocsr()
    if isinstance(model, Hubbard):
        if not basis.spinful:
            raise InvalidSector("Hubbard sector must be (n_up, n_down)")
        hup, hdown, diag = hubbard_pieces(lat, model, sector)
        dim_up, dim_down = hup.shape[0], hdown.shape[0]
        h = sp.kron(hup, sp.identity(dim_down, format="csr"), format="csr")
        h += sp.kron(sp.identity(dim_up, format="csr"), hdown, format="csr")
        h += sp.diags(diag)
        return h.tocsr()
    raise TypeError(f"unknown model {model!r}")


def hubbard_pieces(lat: Lattice, model: Hubbard, sector):
    """Per-spin hopping blocks and the on-site interaction diagonal.

    The full matrix is kron(h_up, I) + kron(I, h_down) + diag(u), which
    callers may apply matrix-free via the reshape identity
    (H ψ)[iu, id] = (h_up Ψ)[iu, id] + (Ψ h_downᵀ)[iu, id] + u·ψ.
    """
    n_up, n_down = sector
    bup = FermionBasis(lat.n_sites, n_up)
    bdown = FermionBasis(lat.n_sites, n_down)
    hup = _hop_matrix(lat, bup, model.t)
    hdown = _hop_matrix(lat, bdown, model.t)
    overlap = np.bitwise_count(
        bup.states[:, None].astype(np.uint64)
        & bdown.states[None, :].astype(np.uint64)
    ).astype(np.float64)
    diag = (model.U * overlap).ravel()
    return hup, hdown, diag


def hamiltonian_operator(lat: Lattice, model, sector) -> spla.LinearOperator:
    """Matrix-free version for sectors too large to assemble in full."""
    if isinstance(model, Hubbard):
        hup, hdown, diag = hubbard_pieces(lat, model, sector)
        du, dd = hup.shape[0], hdown.shape[0]
        hdt = hdown.T.tocsr()

        def matvec(v):
            psi = v.reshape(du, dd)
            out = hup @ psi
            out += psi @ hdt
            out += diag.reshape(du, dd) * psi
            return out.ravel()

        return spla.LinearOperator((du * dd, du * dd), matvec=matvec,
                                   dtype=np.complex128)
    mat = fermion_hamiltonian(lat, model, sector)
    return spla.aslinearoperator(mat.astype(np.complex128))


def ground_state(h, k: int = 1):
    """Lowest k eigenpairs, ascending, with a residual guarantee.

    Accepts a dense array, sparse matrix, or LinearOperator.
    """
    dim = h.shape[0]
    if dim <= DENSE_CUTOFF and not isinstance(h, spla.LinearOperator):
        dense = h.toarray() if sp.issparse(h) else np.asarray(h)
        vals, vecs = np.linalg.eigh(dense)
        return vals[:k], vecs[:, :k]
    kk = min(max(k + 2, 6), dim - 1)
    vals, vecs = spla.eigsh(h, k=kk, which="SA", maxiter=5000)
    order = np.argsort(vals)
    vals, vecs = vals[order][:k], vecs[:, order][:, :k]
    _check_residuals(h, vals, vecs)
    return vals, vecs


def ground_space(h, tol: float = 1e-9):
    """(E0, orthonormal columns spanning the degenerate ground level)."""
    dim = h.shape[0]
    if dim <= DENSE_CUTOFF and not isinstance(h, spla.LinearOperator):
        dense = h.toarray() if sp.issparse(h) else np.asarray(h)
        vals, vecs = np.linalg.eigh(dense)
    else:
        k = min(8, dim - 1)
        while True:
            vals, vecs = spla.eigsh(h, k=k, which="SA", maxiter=5000)
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
            scale = tol * max(1.0, abs(vals[0]))
            if vals[-1] - vals[0] > scale or k >= dim - 1:
                break
            k = min(2 * k, dim - 1)  # whole window degenerate, widen
        _check_residuals(h, vals, vecs)
    scale = tol * max(1.0, abs(vals[0]))
    keep = vals <= vals[0] + scale
    space = vecs[:, keep]
    q, _ = np.linalg.qr(space)
    return vals[0], q


def _check_residuals(h, vals, vecs):
    for lam, v in zip(vals, vecs.T):
        r = np.linalg.norm(h @ v - lam * v)
        if r > 1e-7 * max(1.0, abs(lam)):
            raise NonConvergence(f"eigenpair residual {r:.2e} at λ={lam:.6f}")
