"""Ising model container, energies, MAX-CUT mapping and instance generators.

The energy convention throughout the package is

    E(s) = 1/2 * sum_{i != j} J_ij s_i s_j + sum_i h_i s_i

with a symmetric, zero-diagonal coupling matrix ``J``.  Both orderings of a
bond contribute to the half-sum, so a single bond of strength ``J_01``
contributes ``J_01 * s_0 * s_1`` once.
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.sparse as sp

from .errors import ContractViolation
from .rng import make_rng

__all__ = [
    "DENSE_LIMIT",
    "IsingProblem",
    "CutReport",
    "as_spins",
    "energy",
    "maxcut_to_ising",
    "maxcut_offset",
    "cut_value",
    "gen_bimodal_complete",
    "gen_uniform_spinglass",
    "mirror",
    "parisi_reference_cut",
    "read_instance",
    "write_instance",
]

# problems up to this size are stored as dense matrices
DENSE_LIMIT = 4096

PARISI_E0 = -0.7631667265
PARISI_OMEGA = 2.0 / 3.0
PARISI_A = 0.70


class IsingProblem:
    """Immutable Ising instance with couplings ``J`` and fields ``h``.

    Parameters
    ----------
    couplings : array_like or scipy sparse matrix
        Symmetric ``(N, N)`` matrix with zero diagonal.
    fields : array_like, optional
        Length-``N`` vector; zeros when omitted.
    sparse : bool, optional
        Force sparse (CSR) or dense storage.  By default problems with
        ``N <= DENSE_LIMIT`` are dense and larger ones sparse.
    """

    __slots__ = ("_J", "_h", "_n", "_csr")

    def __init__(self, couplings, fields=None, *, sparse=None):
        if sp.issparse(couplings):
            J = sp.csr_array(couplings, dtype=np.float64)
        else:
            J = np.array(couplings, dtype=np.float64)
            if J.ndim != 2:
                raise ContractViolation("couplings must be a square matrix")
        if J.shape[0] != J.shape[1]:
            raise ContractViolation(f"couplings must be square, got shape {J.shape}")
        n = J.shape[0]
        if n < 1:
            raise ContractViolation("problem needs at least one site")
        h = np.zeros(n) if fields is None else np.array(fields, dtype=np.float64).reshape(-1)
        if h.shape != (n,):
            raise ContractViolation(f"fields must have length {n}, got {h.shape[0]}")
        if not np.all(np.isfinite(h)):
            raise ContractViolation("fields must be finite")

        if sparse is None:
            sparse = n > DENSE_LIMIT
        if sparse:
            J = sp.csr_array(J)
            J.eliminate_zeros()
            J.sort_indices()
            _check_sparse(J)
        else:
            if sp.issparse(J):
                J = J.toarray()
            _check_dense(J)
            J.flags.writeable = False
        h.flags.writeable = False
        self._J = J
        self._h = h
        self._n = n
        self._csr = None

    @classmethod
    def from_triplets(cls, n, rows, cols, values, fields=None, *, sparse=None):
        """Build from upper-triangle triplets ``(i, j, J_ij)`` with ``i < j``."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape):
            raise ContractViolation("triplet arrays must have equal length")
        if rows.size and (np.any(rows >= cols) or rows.min() < 0 or cols.max() >= n):
            raise ContractViolation("triplets must satisfy 0 <= i < j < n")
        upper = sp.coo_array((values, (rows, cols)), shape=(n, n))
        J = sp.csr_array(upper + upper.T)
        if sparse is None:
            sparse = n > DENSE_LIMIT
        return cls(J if sparse else J.toarray(), fields, sparse=sparse)

    @property
    def n_sites(self):
        return self._n

    @property
    def couplings(self):
        """Read-only dense array or CSR matrix."""
        return self._J

    @property
    def fields(self):
        return self._h

    @property
    def is_sparse(self):
        return sp.issparse(self._J)

    def dense_couplings(self):
        return self._J.toarray() if self.is_sparse else self._J

    def csr(self):
        """CSR view of the couplings, cached (used by compiled kernels)."""
        if self._csr is None:
            self._csr = self._J if self.is_sparse else sp.csr_array(self._J)
        return self._csr

    def matvec(self, x):
        """``J @ x`` for a vector, or row-wise ``x @ J`` for an ``(R, N)`` batch."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return self._J @ x
        # J is symmetric, so each row of x @ J equals J @ row
        if self.is_sparse:
            return (self._J @ x.T).T
        return x @ self._J

    def triplets(self):
        """Upper-triangle nonzeros in ``(i < j)`` lexicographic order."""
        upper = sp.triu(self.csr(), k=1, format="coo")
        order = np.lexsort((upper.col, upper.row))
        return upper.row[order], upper.col[order], upper.data[order]

    def __eq__(self, other):
        if not isinstance(other, IsingProblem) or other._n != self._n:
            return NotImplemented if not isinstance(other, IsingProblem) else False
        if not np.array_equal(self._h, other._h):
            return False
        if self.is_sparse or other.is_sparse:
            return (self.csr() != other.csr()).nnz == 0
        return np.array_equal(self._J, other._J)

    __hash__ = None

    def __repr__(self):
        kind = "sparse" if self.is_sparse else "dense"
        return f"IsingProblem(n_sites={self._n}, {kind})"


def _check_dense(J):
    if not np.all(np.isfinite(J)):
        raise ContractViolation("couplings must be finite")
    if np.any(np.diagonal(J) != 0):
        raise ContractViolation("couplings must have zero diagonal")
    if not np.array_equal(J, J.T):
        raise ContractViolation("couplings must be symmetric")


def _check_sparse(J):
    if not np.all(np.isfinite(J.data)):
        raise ContractViolation("couplings must be finite")
    if np.any(J.diagonal() != 0):
        raise ContractViolation("couplings must have zero diagonal")
    if (J != J.T).nnz:
        raise ContractViolation("couplings must be symmetric")


@dataclass(frozen=True)
class CutReport:
    cut_value: float
    offset: float
    ising_energy: float


def as_spins(s, n=None):
    """Validate a spin configuration and return it as an int8 array."""
    arr = np.asarray(s)
    if arr.ndim != 1:
        raise ContractViolation("spin configuration must be one-dimensional")
    if n is not None and arr.shape[0] != n:
        raise ContractViolation(f"expected {n} spins, got {arr.shape[0]}")
    if not np.all((arr == 1) | (arr == -1)):
        raise ContractViolation("spins must be exactly +1 or -1")
    return arr.astype(np.int8)


def energy(problem, s):
    """Ising energy of configuration ``s``."""
    s = as_spins(s, problem.n_sites).astype(np.float64)
    return float(0.5 * s @ problem.matvec(s) + problem.fields @ s)


def maxcut_offset(problem):
    """C0 = 1/4 * sum_{i != j} J_ij."""
    J = problem.couplings
    return 0.25 * float(J.sum())


def maxcut_to_ising(weights):
    """Map symmetric edge weights to an ``h = 0`` Ising problem and its offset C0.

    The cut of any partition ``s`` is ``-energy(s) / 2 + C0``.
    """
    problem = IsingProblem(weights)
    return problem, maxcut_offset(problem)


def cut_value(problem, offset, s):
    e = energy(problem, s)
    return CutReport(cut_value=-0.5 * e + offset, offset=offset, ising_energy=e)


def gen_bimodal_complete(n, seed):
    """Weights of K_n with independent equiprobable +-1 entries.

    Edges are drawn in ``(i < j)`` lexicographic order from ``make_rng(seed)``.
    """
    if n < 2:
        raise ContractViolation("complete graph needs n >= 2")
    rng = make_rng(seed)
    vals = 1.0 - 2.0 * rng.integers(0, 2, size=n * (n - 1) // 2)
    w = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    w[iu] = vals
    w.T[iu] = vals
    return w


def _check_interval(name, interval):
    lo, hi = (float(v) for v in interval)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ContractViolation(f"invalid {name} interval {interval!r}")
    return lo, hi


def gen_uniform_spinglass(n, seed, j_range=(-1.0, 1.0), h_range=(-2.0, 2.0)):
    """Fully connected spin glass with uniform couplings and fields.

    Couplings for each unordered pair are drawn first, in ``(i < j)``
    lexicographic order, followed by the ``n`` fields.  Draws are
    ``lo + (hi - lo) * u`` with ``u`` uniform on ``[0, 1)``.
    """
    if n < 2:
        raise ContractViolation("spin glass needs n >= 2")
    jlo, jhi = _check_interval("j_range", j_range)
    hlo, hhi = _check_interval("h_range", h_range)
    rng = make_rng(seed)
    jvals = jlo + (jhi - jlo) * rng.random(n * (n - 1) // 2)
    h = hlo + (hhi - hlo) * rng.random(n)
    if n > DENSE_LIMIT:
        rows, cols = np.triu_indices(n, k=1)
        return IsingProblem.from_triplets(n, rows, cols, jvals, h)
    J = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    J[iu] = jvals
    J.T[iu] = jvals
    return IsingProblem(J, h)


def mirror(problem):
    """Same instance with all couplings negated; fields are left unchanged."""
    return IsingProblem(-problem.couplings, problem.fields, sparse=problem.is_sparse)


def parisi_reference_cut(n):
    """Finite-size-scaling estimate of the mean optimal cut on bimodal K_n.

    C* = -E*/2 with E* = n^(3/2) * (e0 + A * n^(-omega)).
    """
    if n < 1:
        raise ContractViolation("n must be positive")
    e_star = n ** 1.5 * (PARISI_E0 + PARISI_A * n ** (-PARISI_OMEGA))
    return -0.5 * e_star


def write_instance(path, problem):
    """Write the text instance format (``ising N`` / ``J i j v`` / ``h i v``).

    Only nonzero entries are written, with 17 significant digits.
    """
    rows, cols, vals = problem.triplets()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"ising {problem.n_sites}\n")
        for i, j, v in zip(rows.tolist(), cols.tolist(), vals.tolist()):
            fh.write(f"J {i} {j} {v:.17g}\n")
        for i, v in enumerate(problem.fields.tolist()):
            if v != 0.0:
                fh.write(f"h {i} {v:.17g}\n")


def read_instance(path):
    """Parse a file written by :func:`write_instance` (or by hand)."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or lines[0][0] != "ising" or len(lines[0]) != 2:
        raise ContractViolation(f"{path}: missing 'ising <N>' header")
    n = int(lines[0][1])
    rows, cols, vals = [], [], []
    h = np.zeros(n)
    seen_j, seen_h = set(), set()
    for lineno, parts in enumerate(lines[1:], start=2):
        tag = parts[0]
        if tag == "J" and len(parts) == 4:
            i, j, v = int(parts[1]), int(parts[2]), float(parts[3])
            if not 0 <= i < j < n:
                raise ContractViolation(f"{path}:{lineno}: need 0 <= i < j < {n}")
            if (i, j) in seen_j:
                raise ContractViolation(f"{path}:{lineno}: duplicate coupling ({i}, {j})")
            seen_j.add((i, j))
            rows.append(i)
            cols.append(j)
            vals.append(v)
        elif tag == "h" and len(parts) == 3:
            i = int(parts[1])
            if not 0 <= i < n or i in seen_h:
                raise ContractViolation(f"{path}:{lineno}: bad or duplicate field index {i}")
            seen_h.add(i)
            h[i] = float(parts[2])
        else:
            raise ContractViolation(f"{path}:{lineno}: cannot parse {' '.join(parts)!r}")
    return IsingProblem.from_triplets(n, rows, cols, vals, h)
