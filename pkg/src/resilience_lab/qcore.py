"""Dense linear algebra on density matrices, observables and composite systems.

Conventions used throughout the package:

* subsystem 0 is the leftmost tensor factor and composite indices are
  row-major, i.e. ``|i, j> -> i * d_1 + j``;
* structural checks use ``VALIDATION_TOL`` (1e-9), algebraic identities are
  asserted in the tests at 1e-12 relative to the matrix norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

VALIDATION_TOL = 1e-9

# below this size the block detection in hermitian_spectrum costs more than it saves
_BLOCK_SCAN_MIN_DIM = 256


class DensityError(ValueError):
    """Raised when a matrix is not a valid density matrix."""


class DimensionError(ValueError):
    """Raised on incompatible operand dimensions."""


def _square(m, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    return m


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix.

    Behaves like the underlying array in numpy expressions (``np.asarray``
    returns the entries), so it can be passed anywhere a matrix is accepted.
    """

    entries: np.ndarray

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True, eq=False)
class Observable:
    entries: np.ndarray

    def __post_init__(self):
        m = _square(self.entries, "observable")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > VALIDATION_TOL:
            raise ValueError("observable is not Hermitian")
        object.__setattr__(self, "entries", (m + m.conj().T) / 2)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def operator_norm(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.entries)), initial=0.0))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class CompositeDims:
    dims: tuple[int, ...]

    def __init__(self, dims: Iterable[int]):
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise DimensionError(f"subsystem dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def total(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.dims)

    def __getitem__(self, i: int) -> int:
        return self.dims[i]


class RandomKind(str, Enum):
    GUE_HAMILTONIAN = "gue_hamiltonian"
    HAAR_UNITARY = "haar_unitary"
    HS_RANDOM_STATE = "hs_random_state"


@dataclass(frozen=True)
class RandomSpec:
    kind: RandomKind
    dim: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", RandomKind(self.kind))


# ---------------------------------------------------------------------------
# basic operations


def tensor_product(*ops) -> np.ndarray:
    """Kronecker product of square matrices, leftmost factor first."""
    if not ops:
        raise ValueError("need at least one operand")
    out = _square(ops[0])
    for op in ops[1:]:
        out = np.kron(out, _square(op))
    return out


def partial_trace(rho, dims: CompositeDims | Sequence[int], keep) -> np.ndarray:
    """Reduced state on the subsystems listed in ``keep``.

    ``keep`` may be a single index or an iterable of indices; the kept
    factors appear in ascending index order in the output.
    """
    rho = _square(rho, "rho")
    if not isinstance(dims, CompositeDims):
        dims = CompositeDims(dims)
    if dims.total != rho.shape[0]:
        raise DimensionError(
            f"dims {dims.dims} multiply to {dims.total}, state has dimension {rho.shape[0]}"
        )
    keep = sorted({int(keep)} if np.isscalar(keep) else {int(k) for k in keep})
    if not keep:
        raise ValueError("keep set must be nonempty")
    n = len(dims)
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")
    traced = [i for i in range(n) if i not in keep]
    if not traced:
        return rho.copy()
    dk = int(np.prod([dims[i] for i in keep]))
    dt = int(np.prod([dims[i] for i in traced]))
    t = rho.reshape(dims.dims * 2)
    perm = keep + traced + [n + i for i in keep] + [n + i for i in traced]
    t = t.transpose(perm).reshape(dk, dt, dk, dt)
    return np.einsum("ajbj->ab", t)


def hermitian_spectrum(m) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix.

    Large matrices that are block diagonal up to a permutation (diagonal
    states, twin-peak states in a diagonal basis, ...) are split into their
    connected blocks first.
    """
    m = _square(m)
    d = m.shape[0]
    if d < _BLOCK_SCAN_MIN_DIM:
        return np.linalg.eigvalsh(m)
    off = m.copy()
    np.fill_diagonal(off, 0)
    if not off.any():
        return np.sort(m.diagonal().real)
    del off
    n_comp, labels = connected_components(csr_matrix(m != 0), directed=False)
    if n_comp == 1:
        return np.linalg.eigvalsh(m)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    vals = []
    for block in np.split(order, bounds):
        if block.size == 1:
            vals.append(m[block, block].real)
        else:
            vals.append(np.linalg.eigvalsh(m[np.ix_(block, block)]))
    return np.sort(np.concatenate(vals))


def trace_distance(a, b) -> float:
    a = _square(a, "a")
    b = _square(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    # averaging both orders makes the result exactly symmetric in (a, b)
    s_ab = float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))
    s_ba = float(np.sum(np.abs(np.linalg.eigvalsh(b - a))))
    return 0.25 * (s_ab + s_ba)


def operator_norm(a) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    if isinstance(a, Observable):
        return a.operator_norm
    return Observable(a).operator_norm


def commutator_norm(a, b) -> float:
    """Max-entry norm of ``[a, b]``; cheap stationarity check."""
    a = _square(a)
    b = _square(b)
    return float(np.max(np.abs(a @ b - b @ a), initial=0.0))


def validate_density(m, tol: float = VALIDATION_TOL) -> DensityMatrix:
    """Check a candidate density matrix and return a cleaned copy.

    Small Hermiticity and trace deviations (at most ``tol``) are repaired by
    symmetrizing and renormalizing; anything larger raises
    :class:`DensityError`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = _square(m)
    herm_dev = float(np.max(np.abs(m - m.conj().T), initial=0.0))
    if herm_dev > tol:
        raise DensityError(f"not Hermitian: max|M - M^dag| = {herm_dev:.3e} > {tol:.1e}")
    m = (m + m.conj().T) / 2
    tr = float(np.trace(m).real)
    if abs(tr - 1.0) > tol:
        raise DensityError(f"trace {tr!r} deviates from 1 by more than {tol:.1e}")
    m = m / tr
    lam_min = float(hermitian_spectrum(m)[0])
    if lam_min < -tol:
        raise DensityError(f"negative eigenvalue {lam_min:.3e} below -{tol:.1e}")
    return DensityMatrix(m)


# ---------------------------------------------------------------------------
# random ensembles


def ginibre(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Complex Ginibre matrix with E|g_ij|^2 = 1."""
    return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)


def gue(dim: int, rng: np.random.Generator) -> np.ndarray:
    """GUE matrix; every entry has E|h_ij|^2 = 1/dim (diagonal real)."""
    g = ginibre(dim, rng) / np.sqrt(dim)
    return (g + g.conj().T) / np.sqrt(2)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(dim, rng))
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def hs_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random mixed state from the Hilbert-Schmidt measure."""
    g = ginibre(dim, rng)
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return m / np.trace(m).real


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


_SAMPLERS = {
    RandomKind.GUE_HAMILTONIAN: gue,
    RandomKind.HAAR_UNITARY: haar_unitary,
    RandomKind.HS_RANDOM_STATE: hs_state,
}


def sample_random(spec: RandomSpec) -> np.ndarray:
    """Draw one matrix; identical specs give bit-identical results."""
    if spec.dim < 1:
        raise ValueError(f"dim must be >= 1, got {spec.dim}")
    rng = np.random.default_rng(int(spec.seed))
    return _SAMPLERS[spec.kind](spec.dim, rng)


def maximally_mixed(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex) / dim


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex)
    return np.outer(vec, vec.conj())


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
