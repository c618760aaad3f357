"""Generalized geometric measure of pure multi-qubit states.

GGM = 1 - max over bipartitions A:B of the largest squared Schmidt
coefficient.  Each split is scored on the Gram matrix of the smaller side.
"""
import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import NormalizationError
from .hilbert import PartitionMask, canonical_masks, embed_full, reshape_bipartition

NORM_TOL = 1e-8
DENSE_GRAM_MAX = 256
POWER_TOL = 1e-12
POWER_MAX_ITER = 10_000
TIE_TOL = 1e-12


@dataclass
class GgmResult:
    value: float
    lambda_max_sq: float
    argmax_mask: PartitionMask
    per_partition: dict | None = field(default=None, repr=False)

    @property
    def genuinely_entangled(self):
        return self.value > 1e-10

    def write_csv(self, path_or_file):
        """Dump the per-partition table as ``mask, popcount, lambda_sq`` rows."""
        if self.per_partition is None:
            raise ValueError("per-partition data was not retained")
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(["mask", "popcount", "lambda_sq"])
            for mask, lam in sorted(self.per_partition.items()):
                w.writerow([mask, int(mask).bit_count(), f"{lam:.17g}"])
        finally:
            if own:
                fh.close()


def _check_norm(state):
    nrm = state.norm()
    if abs(nrm - 1.0) > NORM_TOL:
        raise NormalizationError(f"state norm {nrm:.12g} deviates from 1")


def _gram(state, mask):
    m = reshape_bipartition(state, mask)
    if m.shape[0] <= m.shape[1]:
        return m @ m.conj().T
    return m.conj().T @ m


def _power_top(gram):
    rng = np.random.default_rng(0)
    v = rng.standard_normal(gram.shape[0]) + 0j
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(POWER_MAX_ITER):
        w = gram @ v
        new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        v = w / nw
        if abs(new - lam) < POWER_TOL:
            return new
        lam = new
    return lam


def max_schmidt_sq(state, mask, dense_max=DENSE_GRAM_MAX):
    """Largest squared Schmidt coefficient of ``state`` across ``mask``."""
    state = embed_full(state)
    _check_norm(state)
    gram = _gram(state, mask)
    if gram.shape[0] <= dense_max:
        return float(np.linalg.eigvalsh(gram)[-1])
    return _power_top(gram)


def schmidt_spectrum(state, mask):
    """All squared Schmidt coefficients, descending."""
    state = embed_full(state)
    _check_norm(state)
    vals = np.linalg.eigvalsh(_gram(state, mask))[::-1]
    return np.clip(vals, 0.0, None)


def ggm(state, keep_per_partition=False, dense_max=DENSE_GRAM_MAX):
    """GGM of a normalized pure state with its maximizing bipartition.

    Ties between partitions go to the smallest mask integer.
    """
    state = embed_full(state)
    _check_norm(state)
    n = state.n_sites
    masks = list(canonical_masks(n))
    lams = np.empty(len(masks))
    for i, mask in enumerate(masks):
        gram = _gram(state, PartitionMask(n, mask))
        lams[i] = np.linalg.eigvalsh(gram)[-1] if gram.shape[0] <= dense_max else _power_top(gram)
    best = float(min(lams.max(), 1.0))
    # round-off ties resolve to the smallest mask
    i = int(np.argmax(lams >= lams.max() - TIE_TOL))
    table = dict(zip(masks, lams.tolist())) if keep_per_partition else None
    return GgmResult(value=1.0 - best, lambda_max_sq=best, argmax_mask=PartitionMask(n, masks[i]),
                     per_partition=table)
