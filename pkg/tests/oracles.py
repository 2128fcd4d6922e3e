"""Independent reference computations used by the tests.

Nothing here imports the package's solvers; energies are evaluated from the
textbook double sum so the package's vectorized paths are checked against
something written differently.
"""

import itertools

import numpy as np


def all_configs(n):
    """All 2^n spin vectors as an int8 array, site 0 most significant, +1 first."""
    k = np.arange(2 ** n, dtype=np.int64)
    bits = (k[:, None] >> np.arange(n - 1, -1, -1)) & 1
    return (1 - 2 * bits).astype(np.int8)


def energies_of(J, h, S):
    S = S.astype(np.float64)
    n = J.shape[0]
    off = J * (1 - np.eye(n))
    return 0.5 * np.einsum("ki,ij,kj->k", S, off, S) + S @ h


def ground_state(J, h, chunk=1 << 16):
    """Exhaustive minimum energy and the first (lexicographic) minimizer."""
    n = J.shape[0]
    best_e, best_s = np.inf, None
    for start in range(0, 2 ** n, chunk):
        k = np.arange(start, min(start + chunk, 2 ** n), dtype=np.int64)
        bits = (k[:, None] >> np.arange(n - 1, -1, -1)) & 1
        S = (1 - 2 * bits).astype(np.int8)
        E = energies_of(J, h, S)
        i = int(np.argmin(E))
        if E[i] < best_e - 1e-10:
            best_e, best_s = float(E[i]), S[i].copy()
    return best_e, best_s


def energy_loop(J, h, s):
    """Double loop over i != j, as the formula is written."""
    n = len(s)
    total = 0.0
    for i, j in itertools.product(range(n), repeat=2):
        if i != j:
            total += 0.5 * J[i][j] * s[i] * s[j]
    return total + sum(h[i] * s[i] for i in range(n))


def max_cut_exhaustive(w):
    """Best cut over all 2^(n-1) partitions (site 0 fixed on one side)."""
    n = w.shape[0]
    best = -np.inf
    chunk = 1 << 15
    total = 2 ** (n - 1)
    for start in range(0, total, chunk):
        k = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = (k[:, None] >> np.arange(n - 2, -1, -1)) & 1
        side = np.concatenate([np.zeros((len(k), 1), dtype=np.int64), bits], axis=1)
        # weight of edges crossing: sum over i<j of w_ij [side_i != side_j]
        S = (1 - 2 * side).astype(np.float64)
        cross = 0.25 * (w.sum() - np.einsum("ki,ij,kj->k", S, w, S))
        best = max(best, float(cross.max()))
    return best


def md_hamiltonian_formula(J, h, phi, p, alpha, beta, M):
    """H_MD written out term by term."""
    n = len(phi)
    kin = sum(p[i] ** 2 / 2 + phi[i] ** M for i in range(n))
    coup = sum(J[i][j] * phi[i] * phi[j] for i in range(n) for j in range(n) if i != j) / 2
    fld = sum(h[i] * abs(phi[i]) * phi[i] for i in range(n))
    return alpha * kin + beta * (coup + fld)


def md_potential(J, h, phi, alpha, beta, M):
    """H_MD without the kinetic term; its negative gradient is the force."""
    return md_hamiltonian_formula(J, h, phi, np.zeros_like(phi), alpha, beta, M)
