"""Computational-basis machinery for N spin-1/2 sites.

Bit convention: site ``i`` is bit ``i`` of a basis label, so site 0 is the
least significant bit.  A set bit is an up spin: ``sigma^z |b> = (2b - 1) |b>``.
"""
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import BasisMismatchError, DomainError, InvalidPartitionError, SizeError

MAX_SITES = 24


def popcount(labels):
    return np.bitwise_count(np.asarray(labels, dtype=np.int64)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class BasisSector:
    """Ordered list of basis labels, optionally at fixed number of up spins."""

    n_sites: int
    sz_constraint: int | None
    states: np.ndarray = field(repr=False)

    @property
    def dim(self):
        return len(self.states)

    @property
    def is_full(self):
        return self.sz_constraint is None

    def index_of(self, labels):
        """Positions of ``labels`` in ``states``; -1 where absent."""
        labels = np.asarray(labels, dtype=np.int64)
        pos = np.searchsorted(self.states, labels)
        pos = np.minimum(pos, self.dim - 1)
        return np.where(self.states[pos] == labels, pos, -1)

    def same_as(self, other):
        return self.n_sites == other.n_sites and self.sz_constraint == other.sz_constraint


def build_basis(n_sites, sz_constraint=None):
    """Enumerate basis labels in ascending order.

    ``sz_constraint`` is the number of up spins (set bits); ``None`` gives the
    full 2^N basis.
    """
    if not 2 <= n_sites <= MAX_SITES:
        raise SizeError(f"n_sites must lie in [2, {MAX_SITES}], got {n_sites}")
    labels = np.arange(1 << n_sites, dtype=np.int64)
    if sz_constraint is None:
        states = labels
    else:
        if not 0 <= sz_constraint <= n_sites:
            raise DomainError(f"sz_constraint must lie in [0, {n_sites}], got {sz_constraint}")
        states = labels[popcount(labels) == sz_constraint]
        assert len(states) == comb(n_sites, sz_constraint)
    states.setflags(write=False)
    return BasisSector(n_sites, sz_constraint, states)


@dataclass(frozen=True, eq=False)
class StateVector:
    sector: BasisSector
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.sector.dim,):
            raise BasisMismatchError(
                f"expected {self.sector.dim} amplitudes, got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_sites(self):
        return self.sector.n_sites

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalize(self):
        return StateVector(self.sector, self.amplitudes / self.norm())

    def full(self):
        return embed_full(self)


def full_state(n_sites, amplitudes):
    """Wrap a length-2^N amplitude array as a full-basis state."""
    return StateVector(build_basis(n_sites), amplitudes)


def embed_full(state):
    """Express a (possibly sectored) state over the full 2^N basis."""
    if state.sector.is_full:
        return state
    full = build_basis(state.n_sites)
    amps = np.zeros(full.dim, dtype=np.complex128)
    amps[state.sector.states] = state.amplitudes
    return StateVector(full, amps)


def project_to_sector(state, sector):
    """Restrict a full-basis state to the labels of ``sector`` (no renormalization)."""
    if not state.sector.is_full or state.n_sites != sector.n_sites:
        raise BasisMismatchError("projection needs a full-basis state with matching n_sites")
    return StateVector(sector, state.amplitudes[sector.states])


@dataclass(frozen=True)
class PartitionMask:
    """Subsystem A of a bipartition A:B, as an N-bit mask.

    Canonical masks have bit 0 set; ``canonical()`` maps a mask to its
    representative (complement if needed).
    """

    n_sites: int
    mask: int

    def __post_init__(self):
        full = (1 << self.n_sites) - 1
        if self.mask < 0 or self.mask > full:
            raise InvalidPartitionError(f"mask {self.mask} out of range for {self.n_sites} sites")
        k = int(self.mask).bit_count()
        if k == 0 or k == self.n_sites:
            raise InvalidPartitionError("a bipartition needs both parts non-empty")

    @property
    def sites(self):
        return [i for i in range(self.n_sites) if self.mask >> i & 1]

    @property
    def complement_sites(self):
        return [i for i in range(self.n_sites) if not self.mask >> i & 1]

    @property
    def size(self):
        return int(self.mask).bit_count()

    @property
    def is_canonical(self):
        return bool(self.mask & 1)

    def complement(self):
        return PartitionMask(self.n_sites, ((1 << self.n_sites) - 1) ^ self.mask)

    def canonical(self):
        return self if self.is_canonical else self.complement()

    @classmethod
    def from_sites(cls, n_sites, sites):
        mask = 0
        for s in sites:
            mask |= 1 << s
        return cls(n_sites, mask)


def canonical_masks(n_sites):
    """All 2^(N-1) - 1 bipartitions with site 0 in A, ascending."""
    return range(1, (1 << n_sites) - 1, 2)


def reshape_bipartition(state, mask):
    """Amplitude matrix psi[a, b] across the split ``mask``.

    Row index ``a`` packs the A-sites in ascending order (lowest A-site is bit 0
    of ``a``), column index ``b`` does the same for the complement.
    """
    if isinstance(mask, int):
        mask = PartitionMask(state.n_sites, mask)
    if mask.n_sites != state.n_sites:
        raise InvalidPartitionError("mask and state disagree on n_sites")
    state = embed_full(state)
    n = state.n_sites
    a_sites, b_sites = mask.sites, mask.complement_sites
    # reshape([2]*n) puts site n-1 on axis 0
    tensor = state.amplitudes.reshape((2,) * n)
    axes = [n - 1 - s for s in reversed(a_sites)] + [n - 1 - s for s in reversed(b_sites)]
    return tensor.transpose(axes).reshape(1 << len(a_sites), 1 << len(b_sites))
