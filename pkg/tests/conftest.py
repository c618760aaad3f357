import numpy as np
import pytest

from boundggm.hilbert import full_state


def random_state(n, rng):
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return full_state(n, v / np.linalg.norm(v))


def ghz(n):
    v = np.zeros(1 << n, complex)
    v[0] = v[-1] = 2 ** -0.5
    return full_state(n, v)


def w_state(n):
    v = np.zeros(1 << n, complex)
    for i in range(n):
        v[1 << i] = n ** -0.5
    return full_state(n, v)


def product_state(n, bits=0):
    v = np.zeros(1 << n, complex)
    v[bits] = 1
    return full_state(n, v)


def singlet_pairs(n, pairs):
    """Tensor product of (|01> - |10>)/sqrt2 singlets on the given site pairs."""
    v = np.zeros(1 << n, complex)
    for pattern in range(1 << len(pairs)):
        label, amp = 0, 1.0
        for k, (a, b) in enumerate(pairs):
            if pattern >> k & 1:
                label |= 1 << a
                amp = -amp
            else:
                label |= 1 << b
        v[label] = amp
    return full_state(n, v / np.linalg.norm(v))


def reduced_density_oracle(psi, n, keep):
    """Dense partial trace via the full density matrix (independent of reshape)."""
    t = np.asarray(psi).reshape((2,) * n)
    rho = np.tensordot(t, t.conj(), axes=0)  # axes: ket 0..n-1, bra n..2n-1
    # axis k of t is site n-1-k
    keep_axes = sorted(n - 1 - s for s in keep)
    trace_axes = [a for a in range(n) if a not in keep_axes]
    for a in sorted(trace_axes, reverse=True):
        rho = np.trace(rho, axis1=a, axis2=a + rho.ndim // 2)
    d = 1 << len(keep)
    return rho.reshape(d, d)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
