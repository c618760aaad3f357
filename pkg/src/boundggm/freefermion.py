"""Thermodynamic-limit GGM of the transverse XY chain from free fermions.

The ground-state correlations of an L-site block are encoded in the Toeplitz
matrix G_L[i, j] = g_{j-i}, with

    g_l = (1/2pi) int_0^{2pi} dphi e^{-i l phi}
          (cos phi - lam - i gamma sin phi) / |cos phi - lam - i gamma sin phi|.

The block's reduced density matrix has eigenvalues prod_i (1 +- nu_i)/2 where
nu_i are the singular values of G_L.

``lam`` here is the argument of the integrand: the field-to-coupling ratio,
so lam -> infinity is the fully polarized product state and the transition
sits at lam = 1.  The finite chain in :mod:`boundggm.models` is parametrized
by the inverse ratio J/h; use :func:`ed_lambda` to convert.
"""
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import DomainError, QuadratureError, SingularPointError, SpectrumDomainError

DEFAULT_N_QUAD = 4096
DEFAULT_L_MAX = 8
CONVERGENCE_TOL = 1e-10
IMAG_TOL = 1e-10
CRITICAL_BAND = 0.02
NU_CLAMP_TOL = 1e-8


@dataclass(frozen=True)
class XYPoint:
    lam: float
    gamma: float

    def __post_init__(self):
        if self.lam < 0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError(f"gamma must lie in [0, 1], got {self.gamma}")

    @property
    def singular(self):
        return self.lam == 1.0 and self.gamma == 0.0

    @property
    def near_critical(self):
        return abs(self.lam - 1.0) <= CRITICAL_BAND


def ed_lambda(lam):
    """J/h of the finite chain equivalent to integrand parameter ``lam``."""
    return np.inf if lam == 0 else 1.0 / lam


def _integrand(phi, point):
    z = np.cos(phi) - point.lam - 1j * point.gamma * np.sin(phi)
    mag = np.abs(z)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = z / mag
    # removable 0/0 on the grid (lam = 1, phi = 0): take the mean of the one-sided limits
    return np.where(mag == 0, 0.0, f)


def _xx_coefficients(ls, lam):
    """Closed form at gamma = 0, where the integrand is a step function."""
    ls = np.asarray(ls)
    if lam >= 1.0:
        return np.where(ls == 0, -1.0, 0.0)
    phi0 = np.arccos(lam)
    safe = np.where(ls == 0, 1, ls)
    return np.where(ls == 0, 2 * phi0 / np.pi - 1.0, 2 * np.sin(safe * phi0) / (np.pi * safe))


def _trapezoid(ls, point, n):
    phi = 2 * np.pi * np.arange(n) / n
    coeffs = np.fft.fft(_integrand(phi, point)) / n
    return coeffs[np.mod(ls, n)]


def g_coefficients(ls, point, n_quad=DEFAULT_N_QUAD):
    """g_l for every l in ``ls`` by the periodic trapezoid rule.

    The rule is converged when doubling the node count moves no coefficient by
    more than 1e-10.  Inside the band |lam - 1| <= 0.02 the node count may grow
    up to 16x before giving up.
    """
    if point.singular:
        raise SingularPointError("lam = 1, gamma = 0 has a vanishing integrand modulus")
    if n_quad < 256 or n_quad & (n_quad - 1):
        raise DomainError(f"n_quad must be a power of two >= 256, got {n_quad}")
    ls = np.atleast_1d(np.asarray(ls, dtype=np.int64))
    if point.gamma == 0.0:
        return _xx_coefficients(ls, point.lam)
    if np.abs(ls).max() >= n_quad // 2:
        raise DomainError("|l| must stay below n_quad / 2")
    n_cap = n_quad * 16 if point.near_critical else n_quad
    n = n_quad
    coarse = _trapezoid(ls, point, n)
    while True:
        fine = _trapezoid(ls, point, 2 * n)
        diff = np.abs(fine - coarse).max()
        if diff < CONVERGENCE_TOL:
            break
        n *= 2
        if n > n_cap:
            raise QuadratureError(
                f"trapezoid rule not converged at lam={point.lam}, gamma={point.gamma} "
                f"(change {diff:.2e} at {2 * n} nodes); increase n_quad"
            )
        coarse = fine
    imag = np.abs(fine.imag).max()
    if imag > IMAG_TOL:
        raise QuadratureError(f"g_l has imaginary residual {imag:.2e}")
    return fine.real


def g_coefficient(l, point, n_quad=DEFAULT_N_QUAD):
    return float(g_coefficients([l], point, n_quad)[0])


@dataclass(frozen=True)
class CorrelationMatrix:
    L: int
    entries: np.ndarray = field(repr=False)

    def singular_values(self):
        """nu_i, clamped into [0, 1]."""
        nu = np.linalg.svd(self.entries, compute_uv=False)
        over = nu.max() - 1.0 if len(nu) else 0.0
        if over > NU_CLAMP_TOL:
            raise SpectrumDomainError(f"singular value exceeds 1 by {over:.2e}")
        return np.clip(nu, 0.0, 1.0)


def correlation_matrix(L, point, n_quad=DEFAULT_N_QUAD):
    """Toeplitz G_L with entry (i, j) = g_{j-i}."""
    if not 1 <= L <= 64:
        raise DomainError(f"block length must lie in [1, 64], got {L}")
    ls = np.arange(-(L - 1), L)
    g = g_coefficients(ls, point, n_quad)
    i, j = np.indices((L, L))
    return CorrelationMatrix(L, g[(j - i) + (L - 1)])


def _check_nu(nu):
    nu = np.asarray(nu, dtype=float)
    if nu.size and (nu.min() < -NU_CLAMP_TOL or nu.max() > 1 + NU_CLAMP_TOL):
        raise SpectrumDomainError("nu values must lie in [0, 1]")
    return np.clip(nu, 0.0, 1.0)


def block_lambda_max(nu):
    """Largest block eigenvalue prod (1 + nu_i)/2."""
    return float(np.prod((1.0 + _check_nu(nu)) / 2.0))


def block_spectrum(nu):
    """Every block eigenvalue prod (1 + (-1)^x_i nu_i)/2; only for L <= 16."""
    nu = _check_nu(nu)
    if len(nu) > 16:
        raise DomainError("full block spectrum is only expanded for L <= 16")
    signs = np.array(list(product((1.0, -1.0), repeat=len(nu))))
    return np.prod((1.0 + signs * nu) / 2.0, axis=1)


@dataclass
class XYGgm:
    value: float
    lambda_max_sq: float
    block_L: int
    per_block: dict = field(repr=False)


def xy_ggm(point, L_max=DEFAULT_L_MAX, n_quad=DEFAULT_N_QUAD):
    """GGM of the infinite chain maximized over contiguous blocks of 1..L_max sites."""
    if L_max < 1:
        raise DomainError("L_max must be >= 1")
    ls = np.arange(-(L_max - 1), L_max)
    g = g_coefficients(ls, point, n_quad)
    per = {}
    for L in range(1, L_max + 1):
        i, j = np.indices((L, L))
        G = CorrelationMatrix(L, g[(j - i) + (L_max - 1)])
        per[L] = block_lambda_max(G.singular_values())
    best_L = max(per, key=lambda L: (per[L], -L))
    return XYGgm(1.0 - per[best_L], per[best_L], best_L, per)
