"""Lowest eigenpairs of spin Hamiltonians.

Small problems are diagonalized densely.  Larger ones go through a Lanczos
iteration with full reorthogonalization; the k lowest pairs are found one at
a time by deflating already converged vectors, which keeps degenerate levels
visible (plain single-vector Lanczos sees only one copy of each).
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize

from .errors import ConvergenceError, DomainError, PolicyUnsupportedError
from .ggm import ggm
from .hilbert import StateVector, build_basis, embed_full, project_to_sector
from .models import permute_sites

POLICIES = ("momentum", "ggm_min", "ggm_max", "first")


@dataclass(frozen=True)
class SolverOptions:
    k: int = 2
    max_iter: int = 300
    tol: float = 1e-10
    method: str = "auto"
    dense_threshold: int = 4096
    degeneracy_tol: float = 1e-8
    seed: int = 1234
    sector_sweep: bool = True
    max_restarts: int = 20


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: list
    gap: float
    degenerate: bool
    degeneracy_dim: int
    method: str = "dense"
    iterations: int = 0
    residuals: np.ndarray = field(default=None, repr=False)
    sector_minima: dict = field(default_factory=dict, repr=False)

    @property
    def ground_energy(self):
        return float(self.eigenvalues[0])

    def manifold(self):
        return self.eigenvectors[: self.degeneracy_dim]


def phase_fix(amplitudes):
    """Rotate the global phase so the largest-magnitude amplitude is real positive.

    Among amplitudes tied in magnitude (to 1e-10 relative) the lowest index wins.
    """
    v = np.asarray(amplitudes, dtype=np.complex128)
    mag = np.abs(v)
    top = mag.max()
    if top == 0:
        return v.copy()
    i = int(np.argmax(mag >= top * (1 - 1e-10)))
    return v * (np.conj(v[i]) / mag[i])


def _start_vector(dim, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)


def _lanczos_lowest_one(matvec, v0, locked, max_iter, tol_abs):
    """Lowest eigenpair of H restricted to the complement of ``locked``."""
    dim = len(v0)
    m_cap = min(max_iter, dim - locked.shape[0])

    def orth(w):
        for _ in range(2):
            if locked.shape[0]:
                w = w - locked.T @ (locked.conj() @ w)
        return w

    q = orth(v0)
    q = q / np.linalg.norm(q)
    Q = np.zeros((m_cap, dim), dtype=np.complex128)
    alphas, betas = [], []
    theta, x, resid_est = None, None, np.inf
    for j in range(m_cap):
        Q[j] = q
        w = matvec(q)
        alpha = float(np.real(np.vdot(q, w)))
        alphas.append(alpha)
        # full reorthogonalization, twice for safety
        for _ in range(2):
            w = w - Q[: j + 1].T @ (Q[: j + 1].conj() @ w)
            w = orth(w)
        beta = float(np.linalg.norm(w))
        vals, vecs = eigh_tridiagonal(np.array(alphas), np.array(betas), select="i", select_range=(0, 0))
        theta, s = vals[0], vecs[:, 0]
        resid_est = beta * abs(s[-1])
        if resid_est < tol_abs or beta < 1e-14 or j == m_cap - 1:
            x = Q[: j + 1].T @ s
            return theta, x / np.linalg.norm(x), j + 1
        betas.append(beta)
        q = w / beta
    raise AssertionError("unreachable")


def lanczos_lowest(matvec, dim, k, hnorm, opts=SolverOptions()):
    """k lowest eigenpairs through deflated, fully reorthogonalized Lanczos."""
    k = min(k, dim)
    tol_abs = opts.tol * max(hnorm, 1.0)
    locked = np.zeros((0, dim), dtype=np.complex128)
    values, iters, residuals = [], 0, []
    for n in range(k):
        v0 = _start_vector(dim, opts.seed + n)
        best = np.inf
        for _ in range(opts.max_restarts):
            theta, x, it = _lanczos_lowest_one(matvec, v0, locked, opts.max_iter, tol_abs)
            iters += it
            res = float(np.linalg.norm(matvec(x) - theta * x))
            best = min(best, res)
            if res < tol_abs:
                break
            v0 = x
        else:
            raise ConvergenceError(
                f"Lanczos did not converge for eigenpair {n} (residual {best:.3e})", residual=best
            )
        values.append(theta)
        residuals.append(res)
        locked = np.vstack([locked, x[None, :]])
    values = np.array(values)
    order = np.argsort(values, kind="stable")
    return values[order], locked[order], iters, np.array(residuals)[order]


def _solve_sector(H, k, opts):
    dim = H.dim
    k = min(k, dim)
    method = opts.method
    if method == "auto":
        method = "dense" if dim <= opts.dense_threshold else "lanczos"
    if method == "dense":
        dense = H.to_dense()
        if not np.any(dense.imag):
            dense = dense.real
        w, v = scipy.linalg.eigh(dense, subset_by_index=(0, k - 1), driver="evr")
        vecs = v.T.astype(np.complex128)
        res = np.linalg.norm(H.matrix @ vecs.T - vecs.T * w[:k], axis=0)
        return w, vecs, "dense", 0, res
    if method != "lanczos":
        raise DomainError(f"unknown solver method {method!r}")
    w, vecs, iters, res = lanczos_lowest(H.matvec, dim, k, H.norm_estimate(), opts)
    return w, vecs, "lanczos", iters, res


def _pick_sector(minima, n_sites, tol):
    e0 = min(minima.values())
    cands = [n for n, e in minima.items() if e <= e0 + tol * max(1.0, abs(e0))]
    # lowest |S^z| sector holds one member of every SU(2) multiplet; m >= 0 on ties
    return min(cands, key=lambda n: (abs(2 * n - n_sites), -n))


def ground_spectrum(H, k=2, opts=SolverOptions()):
    """k lowest eigenpairs of H, gap and degeneracy of the ground level.

    When H conserves S^z, every magnetization sector is solved and the ground
    level is taken from the lowest-|S^z| sector reaching the global minimum.
    Gap and degeneracy are then measured inside that sector, so the trivial
    S^z partners of a spin multiplet are not counted as degeneracy.
    """
    k = max(int(k), 2)
    minima = {}
    if H.conserves_sz and opts.sector_sweep and H.sector.is_full:
        n = H.n_sites
        solved = {}
        for n_up in range(n + 1):
            Hs = H.restrict(build_basis(n, n_up))
            solved[n_up] = (Hs, _solve_sector(Hs, k, opts))
            minima[n_up] = float(solved[n_up][1][0][0])
        pick = _pick_sector(minima, n, opts.degeneracy_tol)
        Hsel, (w, vecs, method, iters, res) = solved[pick]
        iters = sum(s[1][3] for s in solved.values())
    else:
        Hsel = H
        w, vecs, method, iters, res = _solve_sector(H, k, opts)

    # grow k until the ground multiplet is fully resolved
    while True:
        tol = opts.degeneracy_tol * max(1.0, abs(w[0]))
        deg = int(np.sum(w - w[0] < tol))
        if deg < len(w) or len(w) >= Hsel.dim:
            break
        w2, v2, m2, it2, r2 = _solve_sector(Hsel, 2 * len(w), opts)
        w, vecs, method, iters, res = w2, v2, m2, iters + it2, r2

    states = [StateVector(Hsel.sector, phase_fix(v)) for v in vecs]
    gap = float(w[1] - w[0]) if len(w) > 1 else float("inf")
    return SpectrumResult(
        eigenvalues=np.asarray(w, dtype=float),
        eigenvectors=states,
        gap=max(gap, 0.0),
        degenerate=deg > 1,
        degeneracy_dim=deg,
        method=method,
        iterations=int(iters),
        residuals=np.asarray(res),
        sector_minima=minima,
    )


def momentum_projection(state, perm):
    """Project a state onto the zero-momentum sector of the permutation ``perm``."""
    full = embed_full(state)
    order, p = 1, np.asarray(perm)
    cur = p.copy()
    while not np.array_equal(cur, np.arange(len(p))):
        cur = p[cur]
        order += 1
    acc = full.amplitudes.copy()
    shifted = full
    for _ in range(order - 1):
        shifted = permute_sites(shifted, perm)
        acc = acc + shifted.amplitudes
    out = StateVector(full.sector, acc / order)
    if not state.sector.is_full:
        out = project_to_sector(out, state.sector)
    return out


def _combine(manifold, coeffs):
    amps = sum(c * v.amplitudes for c, v in zip(coeffs, manifold))
    return StateVector(manifold[0].sector, amps).normalize()


def _ggm_extremum(manifold, sign):
    """Search the manifold's unit sphere for the min (sign=+1) or max (-1) GGM."""
    def value(coeffs):
        return sign * ggm(embed_full(_combine(manifold, coeffs))).value

    d = len(manifold)
    if d == 2:
        thetas = np.linspace(0, np.pi / 2, 31)
        phis = np.linspace(0, 2 * np.pi, 24, endpoint=False)
        grid = [(t, f) for t in thetas for f in phis]

        def coeffs_of(p):
            return [np.cos(p[0]), np.exp(1j * p[1]) * np.sin(p[0])]

        scores = [value(coeffs_of(p)) for p in grid]
        start = np.array(grid[int(np.argmin(scores))])
        res = minimize(lambda p: value(coeffs_of(p)), start, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-12})
        best = res.x if res.fun <= min(scores) else start
        return _combine(manifold, coeffs_of(best))

    def coeffs_of(p):
        return p[:d] + 1j * p[d:]

    best_x, best_f = None, np.inf
    for i in range(d):
        x0 = np.zeros(2 * d)
        x0[i] = 1.0
        res = minimize(lambda p: value(coeffs_of(p)), x0, method="Nelder-Mead",
                       options={"maxiter": 2000, "xatol": 1e-8, "fatol": 1e-12})
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
    return _combine(manifold, coeffs_of(best_x))


def resolve_degenerate(manifold, H=None, lattice=None, policy="momentum"):
    """Pick one deterministic, phase-fixed representative of a ground manifold.

    ``momentum`` projects the manifold onto zero momentum under a one-site
    translation and keeps the largest projection; ``ggm_min``/``ggm_max``
    optimize the GGM over the manifold; ``first`` keeps ``manifold[0]``.
    """
    if policy not in POLICIES:
        raise DomainError(f"unknown degeneracy policy {policy!r}")
    manifold = list(manifold)
    if len(manifold) == 1 or policy == "first":
        v = manifold[0]
        return StateVector(v.sector, phase_fix(v.amplitudes))
    if lattice is None and H is not None:
        lattice = H.lattice
    if policy == "momentum":
        perm = None if lattice is None else lattice.translation()
        if perm is None:
            raise PolicyUnsupportedError("momentum policy needs a translation-invariant (periodic) lattice")
        projected = [momentum_projection(v, perm) for v in manifold]
        norms = np.array([p.norm() for p in projected])
        if norms.max() < 1e-8:
            raise PolicyUnsupportedError("the degenerate manifold has no zero-momentum component")
        pick = projected[int(np.argmax(norms >= norms.max() * (1 - 1e-10)))]
        pick = pick.normalize()
        return StateVector(pick.sector, phase_fix(pick.amplitudes))
    v = _ggm_extremum(manifold, +1 if policy == "ggm_min" else -1)
    return StateVector(v.sector, phase_fix(v.amplitudes))
