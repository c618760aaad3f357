"""Sparse spin Hamiltonians written with Pauli matrices.

Three families are provided: the transverse XY chain, the J1-J2 Heisenberg
ring and the J1-J2 square lattice.  Operators are stored as a list of
real-coefficient Pauli strings plus a cached CSR matrix over a basis sector.
"""
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import BasisMismatchError, DomainError, SizeError
from .hilbert import MAX_SITES, BasisSector, StateVector, build_basis, popcount

CHAIN = "chain"
SQUARE = "square"
PERIODIC = "periodic"
OPEN = "open"


@dataclass(frozen=True)
class LatticeSpec:
    kind: str
    dims: tuple
    boundary: str = PERIODIC

    def __post_init__(self):
        if self.kind not in (CHAIN, SQUARE):
            raise DomainError(f"unknown lattice kind {self.kind!r}")
        if self.boundary not in (PERIODIC, OPEN):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if self.kind == CHAIN and (len(dims) != 1 or dims[0] < 2):
            raise DomainError("a chain needs one length >= 2")
        if self.kind == SQUARE and (len(dims) != 2 or min(dims) < 2):
            raise DomainError("a square lattice needs dims (rows, cols) >= 2 x 2")
        if self.n_sites > MAX_SITES:
            raise SizeError(f"{self.n_sites} sites exceeds the cap of {MAX_SITES}")

    @property
    def n_sites(self):
        return int(np.prod(self.dims))

    @property
    def periodic(self):
        return self.boundary == PERIODIC

    def site(self, r, c):
        return r * self.dims[1] + c

    def bonds(self, distance):
        """Undirected bonds as a Counter ``{(i, j): multiplicity}`` with i < j.

        For a chain, ``distance`` 1 and 2 give the i,i+1 and i,i+2 bonds.  For a
        square lattice, 1 gives horizontal and vertical neighbours and 2 gives
        both plaquette diagonals.  On small periodic extents a wrap can land on
        an existing pair; its multiplicity is then incremented.
        """
        out = Counter()

        def add(a, b):
            if a != b:
                out[(min(a, b), max(a, b))] += 1

        if self.kind == CHAIN:
            (n,) = self.dims
            for i in range(n):
                j = i + distance
                if j >= n:
                    if not self.periodic:
                        continue
                    j %= n
                add(i, j)
            return out

        rows, cols = self.dims
        steps = [(0, 1), (1, 0)] if distance == 1 else [(1, 1), (1, -1)]
        for r in range(rows):
            for c in range(cols):
                for dr, dc in steps:
                    r2, c2 = r + dr, c + dc
                    if self.periodic:
                        r2, c2 = r2 % rows, c2 % cols
                    elif not (0 <= r2 < rows and 0 <= c2 < cols):
                        continue
                    add(self.site(r, c), self.site(r2, c2))
        return out

    def translation(self):
        """Site permutation of a one-site shift (along columns for a square lattice).

        Returns None for open lattices.
        """
        if not self.periodic:
            return None
        if self.kind == CHAIN:
            (n,) = self.dims
            return np.array([(i + 1) % n for i in range(n)])
        rows, cols = self.dims
        return np.array([self.site(r, (c + 1) % cols) for r in range(rows) for c in range(cols)])


@dataclass(frozen=True)
class ModelParams:
    """Couplings in energy units (j1, j2) and dimensionless ratios.

    ``lam`` is J/h for the finite XY chain, which is built with h = 1, J = lam.
    """

    j1: float = 1.0
    j2: float = 0.0
    gamma: float = 1.0
    lam: float = 0.0

    @property
    def alpha(self):
        return self.j2 / self.j1

    def with_mu(self, name, value):
        if name == "alpha":
            return replace(self, j2=value * self.j1)
        if name == "lambda":
            return replace(self, lam=value)
        if name == "gamma":
            return replace(self, gamma=value)
        if name == "none":
            return self
        raise DomainError(f"unknown scan parameter {name!r}")


def _pauli_action(states, ops):
    """Target labels and phases of a Pauli string applied to each label."""
    flip = 0
    phase = np.ones(len(states), dtype=np.complex128)
    for op, site in ops:
        bit = (states >> site) & 1
        sign = 2 * bit - 1
        if op == "X":
            flip |= 1 << site
        elif op == "Y":
            flip |= 1 << site
            phase = phase * (1j * sign)
        elif op == "Z":
            phase = phase * sign
        else:
            raise DomainError(f"unknown Pauli operator {op!r}")
    return states ^ flip, phase


@dataclass(eq=False)
class HamiltonianOperator:
    """Real-coefficient Pauli-string Hamiltonian over a basis sector."""

    sector: BasisSector
    terms: list
    conserves_sz: bool = False
    lattice: LatticeSpec | None = None
    name: str = ""
    matrix: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        if not self.sector.is_full and not self.conserves_sz:
            raise BasisMismatchError(f"{self.name or 'operator'} does not conserve S^z; use the full basis")
        self.matrix = self._assemble()

    @property
    def n_sites(self):
        return self.sector.n_sites

    @property
    def dim(self):
        return self.sector.dim

    def _assemble(self):
        states = self.sector.states
        cols = np.arange(self.dim)
        rows_in, cols_in, vals_in = [], [], []
        leak_rows, leak_cols, leak_vals = [], [], []
        for coef, ops in self.terms:
            target, phase = _pauli_action(states, ops)
            idx = self.sector.index_of(target)
            inside = idx >= 0
            rows_in.append(idx[inside])
            cols_in.append(cols[inside])
            vals_in.append(coef * phase[inside])
            if not inside.all():
                leak_rows.append(target[~inside])
                leak_cols.append(cols[~inside])
                leak_vals.append(coef * phase[~inside])
        if leak_rows:
            # out-of-sector pieces (e.g. XX and YY separately) must cancel in sum
            leak = sp.coo_matrix(
                (np.concatenate(leak_vals), (np.concatenate(leak_rows), np.concatenate(leak_cols))),
                shape=(1 << self.n_sites, self.dim),
            ).tocsr()
            leak.sum_duplicates()
            if leak.nnz and np.abs(leak.data).max() > 1e-12:
                raise BasisMismatchError("operator leaks out of the requested S^z sector")
        if not rows_in:
            return sp.csr_matrix((self.dim, self.dim), dtype=np.complex128)
        mat = sp.coo_matrix(
            (np.concatenate(vals_in), (np.concatenate(rows_in), np.concatenate(cols_in))),
            shape=(self.dim, self.dim),
        ).tocsr()
        mat.sum_duplicates()
        mat.eliminate_zeros()
        return mat

    def matvec(self, v):
        return self.matrix @ v

    def apply_terms(self, v):
        """Term-by-term application, independent of the cached matrix."""
        v = np.asarray(v, dtype=np.complex128)
        out = np.zeros(self.dim, dtype=np.complex128)
        for coef, ops in self.terms:
            target, phase = _pauli_action(self.sector.states, ops)
            idx = self.sector.index_of(target)
            ok = idx >= 0
            np.add.at(out, idx[ok], coef * phase[ok] * v[ok])
        return out

    def to_dense(self):
        return self.matrix.toarray()

    def norm_estimate(self):
        """Upper bound on the spectral norm: sum of |coefficients|."""
        return float(sum(abs(c) for c, _ in self.terms))

    def restrict(self, sector):
        if sector.n_sites != self.n_sites:
            raise BasisMismatchError("sector has a different number of sites")
        return HamiltonianOperator(sector, self.terms, self.conserves_sz, self.lattice, self.name)

    def energy(self, state):
        v = state.amplitudes
        return float(np.real(np.vdot(v, self.matvec(v))))


def total_sz(sector):
    """Diagonal of sum_i sigma^z_i over the sector."""
    return (2 * popcount(sector.states) - sector.n_sites).astype(float)


def _heisenberg_terms(bonds, coupling):
    terms = []
    for (i, j), mult in sorted(bonds.items()):
        for op in "XYZ":
            terms.append((coupling * mult, ((op, i), (op, j))))
    return terms


def _resolve_sector(n_sites, sector):
    if sector is None:
        return build_basis(n_sites)
    if sector.n_sites != n_sites:
        raise BasisMismatchError("sector has a different number of sites")
    return sector


def hamiltonian_xy_chain(n_sites, lam, gamma, boundary=PERIODIC, sector=None):
    """(J/2) sum [(1+g) XX + (1-g) YY] + h sum Z with h = 1 and J = lam."""
    lattice = LatticeSpec(CHAIN, (n_sites,), boundary)
    sector = _resolve_sector(n_sites, sector)
    if not sector.is_full:
        raise BasisMismatchError("the XY chain is built over the full basis only")
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    J = float(lam)
    terms = []
    for (i, j), mult in sorted(lattice.bonds(1).items()):
        if J * (1 + gamma):
            terms.append((mult * J / 2 * (1 + gamma), (("X", i), ("X", j))))
        if J * (1 - gamma):
            terms.append((mult * J / 2 * (1 - gamma), (("Y", i), ("Y", j))))
    for i in range(n_sites):
        terms.append((1.0, (("Z", i),)))
    return HamiltonianOperator(sector, terms, conserves_sz=False, lattice=lattice, name="xy_chain")


def hamiltonian_j1j2_chain(n_sites, j1, j2, boundary=PERIODIC, sector=None):
    """J1 sum s_i.s_{i+1} + J2 sum s_i.s_{i+2} on a ring (Pauli vectors)."""
    if n_sites % 2 or n_sites < 4:
        raise DomainError(f"the J1-J2 ring needs an even number of sites >= 4, got {n_sites}")
    if j1 <= 0 or j2 < 0:
        raise DomainError("need j1 > 0 and j2 >= 0")
    lattice = LatticeSpec(CHAIN, (n_sites,), boundary)
    terms = _heisenberg_terms(lattice.bonds(1), j1)
    if j2:
        terms += _heisenberg_terms(lattice.bonds(2), j2)
    return HamiltonianOperator(
        _resolve_sector(n_sites, sector), terms, conserves_sz=True, lattice=lattice, name="j1j2_chain"
    )


def hamiltonian_j1j2_square(rows, cols, j1, j2, boundary=PERIODIC, sector=None):
    """J1 on horizontal/vertical bonds, J2 on both diagonals of every plaquette."""
    if rows * cols > MAX_SITES:
        raise SizeError(f"{rows}x{cols} exceeds the cap of {MAX_SITES} sites")
    if j1 <= 0 or j2 < 0:
        raise DomainError("need j1 > 0 and j2 >= 0")
    lattice = LatticeSpec(SQUARE, (rows, cols), boundary)
    terms = _heisenberg_terms(lattice.bonds(1), j1)
    if j2:
        terms += _heisenberg_terms(lattice.bonds(2), j2)
    return HamiltonianOperator(
        _resolve_sector(lattice.n_sites, sector), terms, conserves_sz=True, lattice=lattice, name="j1j2_square"
    )


def permute_sites(state, perm):
    """Apply the site permutation ``i -> perm[i]`` to a full-basis state."""
    if not state.sector.is_full:
        raise BasisMismatchError("site permutation needs a full-basis state")
    labels = state.sector.states
    target = np.zeros_like(labels)
    for i, j in enumerate(perm):
        target |= ((labels >> i) & 1) << int(j)
    amps = np.zeros_like(state.amplitudes)
    amps[target] = state.amplitudes
    return StateVector(state.sector, amps)
