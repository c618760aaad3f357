"""Dense reference constructions that share no code with the package."""
from functools import reduce

import numpy as np

# single-site Paulis in the bit basis (|b=0> = down, |b=1> = up)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, 1j], [-1j, 0]], dtype=complex)
SZ = np.array([[-1, 0], [0, 1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def site_op(op, site, n):
    """op on ``site``; the leftmost Kronecker factor is site n-1."""
    factors = [op if s == site else I2 for s in reversed(range(n))]
    return reduce(np.kron, factors)


def heisenberg_dense(n, bonds):
    """bonds: iterable of (i, j, coupling); repeated pairs add up."""
    H = np.zeros((1 << n, 1 << n), dtype=complex)
    for i, j, J in bonds:
        for P in (SX, SY, SZ):
            H += J * site_op(P, i, n) @ site_op(P, j, n)
    return H


def xy_dense(n, J, gamma, h, periodic):
    H = np.zeros((1 << n, 1 << n), dtype=complex)
    last = n if periodic else n - 1
    for i in range(last):
        j = (i + 1) % n
        H += J / 2 * (1 + gamma) * site_op(SX, i, n) @ site_op(SX, j, n)
        H += J / 2 * (1 - gamma) * site_op(SY, i, n) @ site_op(SY, j, n)
    for i in range(n):
        H += h * site_op(SZ, i, n)
    return H


def square_bonds(rows, cols, periodic):
    """Independent enumeration of J1 and J2 bonds as lists of site pairs with repeats."""
    j1, j2 = [], []
    for r in range(rows):
        for c in range(cols):
            me = r * cols + c
            for dr, dc, target in ((0, 1, j1), (1, 0, j1), (1, 1, j2), (1, -1, j2)):
                rr, cc = r + dr, c + dc
                if periodic:
                    rr, cc = rr % rows, cc % cols
                elif not (0 <= rr < rows and 0 <= cc < cols):
                    continue
                other = rr * cols + cc
                if other != me:
                    target.append(tuple(sorted((me, other))))
    return j1, j2


def ring_bonds(n, j1, j2):
    return [(i, (i + 1) % n, j1) for i in range(n)] + [(i, (i + 2) % n, j2) for i in range(n)]


def multiplet_spectrum(H, n):
    """Eigenvalues of the lowest |S^z| block of a dense S^z-conserving matrix."""
    labels = np.arange(1 << n)
    pop = np.array([bin(x).count("1") for x in labels])
    target = (n + 1) // 2
    idx = labels[pop == target]
    return np.linalg.eigvalsh(H[np.ix_(idx, idx)])
