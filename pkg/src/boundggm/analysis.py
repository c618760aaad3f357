"""Parameter scans, the bound GGM and gapless/gapped classification.

The bound GGM is E_B = E - d^2E/dmu^2.  A positive value marks a gapless
phase and a negative one a gapped phase; zero crossings of E_B are the
transition estimates.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .eigensolve import SolverOptions, ground_spectrum, resolve_degenerate
from .errors import (BoundGGMError, DomainError, FeatureNotFoundError, IndeterminateReportError,
                     ScanError, SizeError)
from .freefermion import DEFAULT_L_MAX, DEFAULT_N_QUAD, XYPoint, xy_ggm
from .ggm import ggm
from .hilbert import embed_full
from .models import (CHAIN, SQUARE, LatticeSpec, ModelParams, hamiltonian_j1j2_chain,
                     hamiltonian_j1j2_square, hamiltonian_xy_chain)

MODEL_KINDS = ("xy_thermo", "xy_finite", "j1j2_chain", "j1j2_square")
MIN_SCAN_POINTS = 7
DEFAULT_NOISE_FLOOR = 1e-12
GAPLESS, GAPPED = "gapless", "gapped"
DOWN, UP = "+to-", "-to+"


@dataclass(frozen=True)
class ModelDescriptor:
    kind: str
    lattice: LatticeSpec | None = None
    params: ModelParams = ModelParams()
    mu_name: str = "alpha"

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}")
        if self.kind != "xy_thermo" and self.lattice is None:
            raise DomainError(f"{self.kind} needs a lattice")

    def hamiltonian(self, mu):
        p = self.params.with_mu(self.mu_name, mu)
        lat = self.lattice
        if self.kind == "xy_finite":
            return hamiltonian_xy_chain(lat.n_sites, p.lam, p.gamma, lat.boundary)
        if self.kind == "j1j2_chain":
            return hamiltonian_j1j2_chain(lat.n_sites, p.j1, p.j2, lat.boundary)
        if self.kind == "j1j2_square":
            return hamiltonian_j1j2_square(*lat.dims, p.j1, p.j2, lat.boundary)
        raise DomainError("xy_thermo has no finite Hamiltonian")

    def xy_point(self, mu):
        p = self.params.with_mu(self.mu_name, mu)
        return XYPoint(p.lam, p.gamma)


def j1j2_chain(n_sites, boundary="periodic"):
    return ModelDescriptor("j1j2_chain", LatticeSpec(CHAIN, (n_sites,), boundary), ModelParams(1.0, 0.0), "alpha")


def j1j2_square(rows, cols, boundary="periodic"):
    return ModelDescriptor("j1j2_square", LatticeSpec(SQUARE, (rows, cols), boundary), ModelParams(1.0, 0.0), "alpha")


def xy_thermo(gamma):
    return ModelDescriptor("xy_thermo", None, ModelParams(gamma=gamma), "lambda")


@dataclass
class ScanSeries:
    mu: np.ndarray
    spacing: float
    energy: np.ndarray
    gap: np.ndarray
    ggm: np.ndarray
    degenerate: np.ndarray
    argmax_mask: np.ndarray
    block_L: np.ndarray
    d2: np.ndarray | None = None
    bound: np.ndarray | None = None
    endpoint_flag: np.ndarray | None = None
    interpolated: np.ndarray | None = None
    iterations: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.mu)


def make_grid(lo, hi, step, exclude=None):
    """Uniform grid lo, lo+step, ..., hi; ``exclude=(center, halfwidth)`` drops
    points with |mu - center| < halfwidth."""
    if not step > 0:
        raise DomainError(f"grid step must be positive, got {step}")
    if hi < lo:
        raise DomainError("grid upper end lies below the lower end")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    grid = np.round(lo + step * np.arange(n), 12)
    if exclude is not None:
        c, w = exclude
        grid = grid[np.abs(grid - c) >= w - 1e-12]
    return grid


def _runs(mu, spacing):
    """Index ranges of maximal uniformly spaced stretches."""
    breaks = np.nonzero(np.abs(np.diff(mu) - spacing) > 1e-9 * max(spacing, 1.0))[0]
    starts = np.concatenate([[0], breaks + 1])
    stops = np.concatenate([breaks + 1, [len(mu)]])
    return list(zip(starts.tolist(), stops.tolist()))


def _check_grid(mu):
    mu = np.asarray(mu, dtype=float)
    if len(mu) < MIN_SCAN_POINTS:
        raise SizeError(f"a scan needs at least {MIN_SCAN_POINTS} points")
    d = np.diff(mu)
    if np.any(d <= 0):
        raise DomainError("scan grid must be strictly ascending")
    spacing = float(d.min())
    steps = d / spacing
    if np.any(np.abs(steps - np.round(steps)) > 1e-6):
        raise DomainError("scan grid points must lie on one uniform lattice")
    return mu, spacing


def evaluate_point(model, mu, opts=SolverOptions(), policy="momentum", L_max=DEFAULT_L_MAX,
                   n_quad=DEFAULT_N_QUAD):
    """Ground-state GGM and spectral data at one parameter value."""
    if model.kind == "xy_thermo":
        r = xy_ggm(model.xy_point(mu), L_max, n_quad)
        return dict(energy=np.nan, gap=np.nan, ggm=r.value, degenerate=False,
                    argmax_mask=(1 << r.block_L) - 1, block_L=r.block_L, iterations=0)
    H = model.hamiltonian(mu)
    spec = ground_spectrum(H, opts.k, opts)
    if spec.degenerate:
        state = resolve_degenerate(spec.manifold(), H, model.lattice, policy)
    else:
        state = spec.eigenvectors[0]
    g = ggm(embed_full(state))
    return dict(energy=spec.ground_energy, gap=spec.gap, ggm=g.value, degenerate=spec.degenerate,
                argmax_mask=g.argmax_mask.mask, block_L=0, iterations=spec.iterations)


def _evaluate_star(args):
    model, mu = args[0], args[1]
    try:
        return evaluate_point(*args)
    except BoundGGMError as exc:
        raise ScanError(f"scan failed at {model.mu_name}={mu}: {exc}", mu=mu) from exc


def scan_ggm(model, mu_grid, opts=SolverOptions(), policy="momentum", L_max=DEFAULT_L_MAX,
             n_quad=DEFAULT_N_QUAD, workers=1):
    """GGM, energy and gap along ``mu_grid``.  Any failing point fails the whole scan."""
    mu, spacing = _check_grid(mu_grid)
    jobs = [(model, float(m), opts, policy, L_max, n_quad) for m in mu]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate_star, jobs))
    else:
        rows = [_evaluate_star(j) for j in jobs]

    def col(key, dtype=float):
        return np.array([r[key] for r in rows], dtype=dtype)

    return ScanSeries(
        mu=mu, spacing=spacing, energy=col("energy"), gap=col("gap"), ggm=col("ggm"),
        degenerate=col("degenerate", bool), argmax_mask=col("argmax_mask", np.int64),
        block_L=col("block_L", np.int64), iterations=int(sum(r["iterations"] for r in rows)),
        meta={"model": model.kind, "mu_name": model.mu_name, "policy": policy},
    )


def second_derivative(series):
    """Fill d2 (uniform-grid stencils) and bound = ggm - d2.

    Interior points use (E[i+1] - 2E[i] + E[i-1]) / h^2.  The ends of every
    uniform stretch use the one-sided (2E0 - 5E1 + 4E2 - E3) / h^2 stencil and
    are flagged.  Stencils touching a degenerate point are discarded and d2 is
    linearly interpolated there from the nearest valid neighbours.
    """
    mu, E = series.mu, np.asarray(series.ggm, dtype=float)
    n, h = len(mu), series.spacing
    if n < 3:
        raise SizeError("second derivative needs at least 3 points")
    deg = np.asarray(series.degenerate, dtype=bool)
    d2 = np.full(n, np.nan)
    valid = np.zeros(n, dtype=bool)
    endpoint = np.zeros(n, dtype=bool)
    for start, stop in _runs(mu, h):
        length = stop - start
        for i in range(start, stop):
            if start < i < stop - 1:
                idx = [i - 1, i, i + 1]
                val = (E[i + 1] - 2 * E[i] + E[i - 1]) / h**2
            else:
                endpoint[i] = True
                sgn = 1 if i == start else -1
                if length >= 4:
                    idx = [i + sgn * k for k in range(4)]
                    val = (2 * E[idx[0]] - 5 * E[idx[1]] + 4 * E[idx[2]] - E[idx[3]]) / h**2
                elif length == 3:
                    idx = [start, start + 1, start + 2]
                    val = (E[idx[0]] - 2 * E[idx[1]] + E[idx[2]]) / h**2
                else:
                    continue
            if not deg[idx].any():
                d2[i], valid[i] = val, True
        good = np.arange(start, stop)[valid[start:stop]]
        bad = np.arange(start, stop)[~valid[start:stop]]
        if len(good) and len(bad):
            d2[bad] = np.interp(mu[bad], mu[good], d2[good])
    out = replace(series)
    out.d2 = d2
    out.bound = E - d2
    out.endpoint_flag = endpoint
    out.interpolated = ~valid & np.isfinite(d2)
    return out


@dataclass
class PhaseReport:
    crossings: list
    segments: list
    noise_floor: float

    def to_dict(self):
        return {
            "noise_floor": self.noise_floor,
            "crossings": [{"mu_star": m, "direction": d} for m, d in self.crossings],
            "segments": [{"mu_lo": a, "mu_hi": b, "sign": s, "label": lab}
                         for a, b, s, lab in self.segments],
        }


def label_for(sign):
    return GAPLESS if sign > 0 else GAPPED


def zero_crossings(series, noise_floor=DEFAULT_NOISE_FLOOR):
    """Sign changes of the bound GGM, located by linear interpolation."""
    if series.bound is None:
        raise DomainError("run second_derivative first")
    b = series.bound
    ok = np.isfinite(b) & (np.abs(b) > noise_floor) & ~series.endpoint_flag
    idx = np.nonzero(ok)[0]
    if not len(idx):
        raise IndeterminateReportError("every bound-GGM value lies below the noise floor")
    crossings = []
    for i, j in zip(idx[:-1], idx[1:]):
        if np.sign(b[i]) != np.sign(b[j]):
            mu_star = series.mu[i] + (series.mu[j] - series.mu[i]) * b[i] / (b[i] - b[j])
            crossings.append((float(mu_star), DOWN if b[i] > 0 else UP))
    edges = [float(series.mu[0])] + [c[0] for c in crossings] + [float(series.mu[-1])]
    sign = 1 if b[idx[0]] > 0 else -1
    segments = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        segments.append((lo, hi, "+" if sign > 0 else "-", label_for(sign)))
        sign = -sign
    return PhaseReport(crossings, segments, float(noise_floor))


def calibrate_noise_floor(model, mu, opts=SolverOptions(), policy="momentum", n_points=MIN_SCAN_POINTS,
                          spacing=0.01, **kw):
    """5x the spread of the bound GGM over a scan of a parameter the model ignores."""
    frozen = replace(model, params=model.params.with_mu(model.mu_name, mu), mu_name="none")
    grid = mu + spacing * np.arange(n_points)
    s = second_derivative(scan_ggm(frozen, grid, opts, policy, **kw))
    spread = float(np.nanmax(s.bound) - np.nanmin(s.bound))
    return max(5.0 * spread, DEFAULT_NOISE_FLOOR)


@dataclass
class MGFeature:
    mu: float
    criterion: str
    score: float


def mg_point_detector(series, window=(0.4, 0.6), contrast=10.0):
    """Sharpest local feature of the GGM inside ``window``.

    Candidates are interior extrema of E and interior maxima of |dE/dmu|
    (located between grid points); each is scored by the local curvature
    magnitude and must stand ``contrast`` times above the window's median.
    """
    mu, E, h = series.mu, np.asarray(series.ggm, dtype=float), series.spacing
    inside = np.nonzero((mu >= window[0] - 1e-12) & (mu <= window[1] + 1e-12))[0]
    if len(inside) < 4:
        raise FeatureNotFoundError("window holds too few grid points")
    lo, hi = inside[0], inside[-1]
    curv = np.full(len(E), np.nan)
    curv[1:-1] = np.abs(E[2:] - 2 * E[1:-1] + E[:-2]) / h**2
    slope = np.abs(np.diff(E)) / h

    cands = []
    for i in range(lo + 1, hi):
        if (E[i] > E[i - 1] and E[i] > E[i + 1]) or (E[i] < E[i - 1] and E[i] < E[i + 1]):
            cands.append((curv[i], float(mu[i]), "extremum"))
    for i in range(lo + 1, hi - 1):
        if slope[i] > slope[i - 1] and slope[i] > slope[i + 1]:
            cands.append((np.nanmax(curv[i:i + 2]), float(0.5 * (mu[i] + mu[i + 1])), "slope"))
    base = float(np.nanmedian(curv[lo:hi + 1]))
    floor = max(contrast * base, 1e-9)
    cands = [c for c in cands if np.isfinite(c[0]) and c[0] > floor]
    if not cands:
        raise FeatureNotFoundError("no GGM feature stands out inside the window")
    score, where, kind = max(cands, key=lambda c: (c[0], -c[1]))
    return MGFeature(where, kind, float(score))
