"""Open-boundary rectangular lattice geometry for the local encoding.

Sites are indexed row-major from the bottom-left corner: site(x, y) =
y*nx + x.  Faces of the dual (nx-1)x(ny-1) grid are two-colored; odd
faces host one auxiliary qubit each, appended after the bulk indices in
row-major face order.  Every edge carries an arrow used by the encoder:
vertical edges point down on even columns and up on odd columns,
horizontal edges alternate direction by row.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class InvalidLattice(ValueError):
    pass


@dataclass(frozen=True)
class Edge:
    i: int            # left (horizontal) or bottom (vertical) site
    j: int
    kind: str         # "h" or "v"
    tail: int         # arrow origin
    head: int
    sign: int         # intrinsic sign; -1 only for up-oriented vertical edges
    aux: int | None


@dataclass(frozen=True)
class Face:
    fx: int
    fy: int
    corners: tuple    # (bottom-left, bottom-right, top-right, top-left)
    parity: str       # "odd" or "even"
    aux: int | None
    neighbor_aux: dict = field(compare=False)


@dataclass(frozen=True)
class Lattice:
    nx: int
    ny: int
    spinful: bool
    n_sites: int
    n_aux: int
    edges: tuple
    faces: tuple
    aux_index: dict = field(compare=False)   # (fx, fy) -> aux qubit

    @property
    def n_qubits_per_copy(self) -> int:
        return self.n_sites + self.n_aux

    @property
    def n_qubits(self) -> int:
        return self.n_qubits_per_copy * (2 if self.spinful else 1)

    @property
    def spin_offset(self) -> int:
        """Index offset of the spin-down copy (0 when spinless)."""
        return self.n_qubits_per_copy if self.spinful else 0

    def site(self, x: int, y: int) -> int:
        if not (0 <= x < self.nx and 0 <= y < self.ny):
            raise ValueError(f"site ({x},{y}) outside {self.nx}x{self.ny}")
        return y * self.nx + x

    def site_xy(self, s: int) -> tuple:
        return s % self.nx, s // self.nx

    def edge_between(self, i: int, j: int) -> Edge:
        a, b = min(i, j), max(i, j)
        for e in self.edges:
            if (e.i, e.j) == (a, b):
                return e
        raise ValueError(f"({i},{j}) is not an edge")

    def is_corner(self, s: int) -> bool:
        x, y = self.site_xy(s)
        return x in (0, self.nx - 1) and y in (0, self.ny - 1)


def _face_parity(fx: int, fy: int, nx: int) -> str:
    # bottom-right face is always odd; this anchor reproduces the
    # worked 3x2 example and keeps #odd >= #even on every lattice
    return "odd" if (fx + fy) % 2 == nx % 2 else "even"


def build_lattice(nx: int, ny: int, spinful: bool = False) -> Lattice:
    if nx < 2 or ny < 2:
        raise InvalidLattice(f"need nx, ny >= 2, got {nx}x{ny}")

    n_sites = nx * ny
    site = lambda x, y: y * nx + x

    odd_faces = [
        (fx, fy)
        for fy in range(ny - 1)
        for fx in range(nx - 1)
        if _face_parity(fx, fy, nx) == "odd"
    ]
    aux_index = {f: n_sites + k for k, f in enumerate(odd_faces)}

    def face_aux(fx, fy):
        return aux_index.get((fx, fy))

    def edge_aux(faces):
        hits = [face_aux(*f) for f in faces if f in aux_index]
        assert len(hits) <= 1  # checkerboard: adjacent faces alternate parity
        return hits[0] if hits else None

    edges = []
    anchor = nx % 2
    for y in range(ny):
        leftward = (y % 2) == anchor
        for x in range(nx - 1):
            i, j = site(x, y), site(x + 1, y)
            adjacent = [(x, y - 1), (x, y)]
            adjacent = [(fx, fy) for fx, fy in adjacent if 0 <= fy < ny - 1]
            tail, head = (j, i) if leftward else (i, j)
            edges.append(Edge(i, j, "h", tail, head, 1, edge_aux(adjacent)))
    for y in range(ny - 1):
        for x in range(nx):
            i, j = site(x, y), site(x, y + 1)
            adjacent = [(x - 1, y), (x, y)]
            adjacent = [(fx, fy) for fx, fy in adjacent if 0 <= fx < nx - 1]
            if x % 2 == 0:
                tail, head, sign = j, i, 1    # down
            else:
                tail, head, sign = i, j, -1   # up
            edges.append(Edge(i, j, "v", tail, head, sign, edge_aux(adjacent)))

    faces = []
    for fy in range(ny - 1):
        for fx in range(nx - 1):
            corners = (site(fx, fy), site(fx + 1, fy),
                       site(fx + 1, fy + 1), site(fx, fy + 1))
            neigh = {
                "left": face_aux(fx - 1, fy),
                "right": face_aux(fx + 1, fy),
                "down": face_aux(fx, fy - 1),
                "up": face_aux(fx, fy + 1),
            }
            faces.append(Face(fx, fy, corners, _face_parity(fx, fy, nx),
                              face_aux(fx, fy), neigh))

    return Lattice(nx, ny, spinful, n_sites, len(odd_faces),
                   tuple(edges), tuple(faces), aux_index)


def fermion_parity_constraint(lat: Lattice) -> str:
    n_odd = sum(f.parity == "odd" for f in lat.faces)
    n_even = len(lat.faces) - n_odd
    if n_odd == n_even + 1:
        return "even-only"
    if n_even > n_odd:
        return "degenerate"
    return "unconstrained"
