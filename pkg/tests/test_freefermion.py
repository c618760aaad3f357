import numpy as np
import pytest
from scipy.integrate import quad

from boundggm.eigensolve import SolverOptions, ground_spectrum
from boundggm.errors import DomainError, SingularPointError, SpectrumDomainError
from boundggm.freefermion import (
    XYPoint, block_lambda_max, block_spectrum, correlation_matrix, ed_lambda,
    g_coefficient, g_coefficients, xy_ggm,
)
from boundggm.ggm import max_schmidt_sq
from boundggm.hilbert import PartitionMask
from boundggm.models import hamiltonian_xy_chain


def g_oracle(l, lam, gamma, points=None):
    """Adaptive quadrature of the real part; the imaginary part integrates to zero."""
    def f(phi):
        z = np.cos(phi) - lam - 1j * gamma * np.sin(phi)
        return ((z / abs(z)) * np.exp(-1j * l * phi)).real
    val, _ = quad(f, 0, 2 * np.pi, epsabs=1e-13, epsrel=1e-13, limit=400, points=points)
    return val / (2 * np.pi)


def test_ising_limit_coefficient():
    assert abs(g_coefficient(-1, XYPoint(0.0, 1.0)) - 1) < 1e-12
    assert abs(g_coefficient(1, XYPoint(0.0, 1.0))) < 1e-12


def test_polarized_limit():
    assert abs(g_coefficient(0, XYPoint(1e6, 1.0)) + 1) < 1e-6


@pytest.mark.parametrize("lam,gamma", [(0.5, 1.0), (1.7, 0.8), (0.3, 0.2), (0.97, 0.5)])
def test_against_adaptive_quadrature(lam, gamma):
    ls = np.arange(-4, 5)
    got = g_coefficients(ls, XYPoint(lam, gamma))
    want = [g_oracle(l, lam, gamma) for l in ls]
    assert np.allclose(got, want, atol=1e-9, rtol=0)


def test_xx_closed_form_matches_quadrature():
    ls = np.arange(-3, 4)
    got = g_coefficients(ls, XYPoint(0.4, 0.0))
    kinks = [np.arccos(0.4), 2 * np.pi - np.arccos(0.4)]
    want = [g_oracle(l, 0.4, 0.0, kinks) for l in ls]
    assert np.allclose(got, want, atol=1e-8)
    assert np.allclose(g_coefficients(ls, XYPoint(1.3, 0.0)), -(ls == 0).astype(float))


@pytest.mark.parametrize("lam,gamma", [(0.5, 1.0), (2.0, 1.0), (0.7, 0.2), (1.5, 0.8)])
def test_quadrature_self_consistency(lam, gamma):
    p = XYPoint(lam, gamma)
    ls = np.arange(-6, 7)
    assert np.abs(g_coefficients(ls, p, 4096) - g_coefficients(ls, p, 16384)).max() < 1e-10


def test_singular_point():
    with pytest.raises(SingularPointError):
        g_coefficients([0], XYPoint(1.0, 0.0))
    # gamma > 0 at lam = 1 is allowed; the kink at phi = 0 needs a finer base grid
    g = g_coefficients([0, 1], XYPoint(1.0, 0.5), n_quad=65536)
    assert np.allclose(g, [g_oracle(0, 1.0, 0.5, [np.pi]), g_oracle(1, 1.0, 0.5, [np.pi])], atol=1e-9)


def test_domain_errors():
    with pytest.raises(DomainError):
        XYPoint(-0.1, 1.0)
    with pytest.raises(DomainError):
        XYPoint(0.5, 1.2)
    with pytest.raises(DomainError):
        correlation_matrix(0, XYPoint(0.5, 1.0))
    with pytest.raises(DomainError):
        g_coefficients([0], XYPoint(0.5, 1.0), n_quad=1000)


def test_single_site_values():
    # lambda^2_max for one site is (1 + |g_0|)/2
    assert abs(block_lambda_max(correlation_matrix(1, XYPoint(0.0, 1.0)).singular_values()) - 0.5) < 1e-12
    big = block_lambda_max(correlation_matrix(1, XYPoint(1e6, 1.0)).singular_values())
    assert abs(big - 1) < 1e-6


def test_two_site_block_against_majorana_matrix():
    lam, gamma = 0.6, 0.7
    g = {l: g_oracle(l, lam, gamma) for l in range(-1, 2)}
    L = 2
    B = np.zeros((2 * L, 2 * L))
    for m in range(L):
        for n in range(L):
            l = n - m
            B[2 * m:2 * m + 2, 2 * n:2 * n + 2] = [[0, g[l]], [-g[-l], 0]]
    ev = np.linalg.eigvals(B)
    assert np.abs(ev.real).max() < 1e-10
    nu_oracle = np.sort(np.abs(ev.imag))[::2]
    nu = np.sort(correlation_matrix(L, XYPoint(lam, gamma)).singular_values())
    assert np.allclose(nu, nu_oracle, atol=1e-9)


def test_block_lambda_max_examples():
    assert block_lambda_max([1.0]) == 1.0
    assert abs(block_lambda_max([0.0, 0.0]) - 0.25) < 1e-15
    assert abs(block_lambda_max([0.6, 0.8]) - 0.72) < 1e-15
    with pytest.raises(SpectrumDomainError):
        block_lambda_max([1.1])


@pytest.mark.parametrize("L", [1, 4, 9, 16])
def test_block_spectrum_normalized(L):
    nu = correlation_matrix(L, XYPoint(0.8, 0.6)).singular_values()
    e = block_spectrum(nu)
    assert len(e) == 2**L
    assert abs(e.sum() - 1) < 1e-10
    assert abs(e.max() - block_lambda_max(nu)) < 1e-14


def test_block_spectrum_size_limit():
    with pytest.raises(DomainError):
        block_spectrum(np.zeros(17))


def test_xy_ggm_limits():
    assert abs(xy_ggm(XYPoint(0.0, 1.0)).value - 0.5) < 1e-10
    assert xy_ggm(XYPoint(50.0, 1.0)).value < 1e-3
    r = xy_ggm(XYPoint(0.5, 1.0), L_max=4)
    assert set(r.per_block) == {1, 2, 3, 4}
    assert r.lambda_max_sq == max(r.per_block.values())


def test_finite_chain_agrees_on_single_site():
    p = XYPoint(0.5, 1.0)
    ff = block_lambda_max(correlation_matrix(1, p).singular_values())
    H = hamiltonian_xy_chain(10, ed_lambda(p.lam), 1.0)
    spec = ground_spectrum(H, k=2, opts=SolverOptions(sector_sweep=False))
    ed = max_schmidt_sq(spec.manifold()[0], PartitionMask(10, 1))
    assert abs(ff - ed) < 0.02


def test_derivative_grows_towards_critical_point():
    def slope(lam, h=1e-4):
        return abs(xy_ggm(XYPoint(lam + h, 1.0), L_max=2).value
                   - xy_ggm(XYPoint(lam - h, 1.0), L_max=2).value) / (2 * h)
    s = [slope(1 - d) for d in (0.08, 0.04, 0.02)]
    assert s[0] < s[1] < s[2]
