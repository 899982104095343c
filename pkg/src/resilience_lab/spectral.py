"""Eigendecomposition, gap analysis, dephasing and unitary evolution.

Everything here works in the energy eigenbasis: a state ``rho`` is rotated
to ``V^dag rho V`` once, then dephasing is a mask over blocks of (near)
degenerate levels and evolution is an elementwise phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .qcore import VALIDATION_TOL, DimensionError, _square

#: relative clustering tolerance; levels closer than this times ||H|| are merged
CLUSTER_RTOL = 1e-10


@dataclass(frozen=True)
class GapReport:
    nondegenerate_spectrum: bool
    nondegenerate_gaps: bool
    min_level_spacing: float
    min_gap_separation: float
    tolerance_used: float


@dataclass(frozen=True, eq=False)
class SpectralHamiltonian:
    """Hermitian matrix together with its (phase-fixed) eigendecomposition.

    Build instances with :func:`eigendecompose`. For diagonal input the
    eigenbasis is a permutation of the computational basis and is kept as
    an index array, which keeps d = 4096 cheap.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    tol: float
    _vectors: np.ndarray | None = None
    _perm: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues), initial=0.0))

    @cached_property
    def eigenvectors(self) -> np.ndarray:
        if self._vectors is not None:
            return self._vectors
        v = np.zeros((self.dim, self.dim), dtype=complex)
        v[self._perm, np.arange(self.dim)] = 1.0
        return v

    @cached_property
    def _inverse_perm(self) -> np.ndarray:
        return np.argsort(self._perm)

    def to_eigenbasis(self, m) -> np.ndarray:
        """``V^dag m V``."""
        m = np.asarray(m, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise DimensionError(f"operator shape {m.shape} does not match H of dim {self.dim}")
        if self._vectors is None:
            return m[np.ix_(self._perm, self._perm)]
        v = self._vectors
        return v.conj().T @ m @ v

    def from_eigenbasis(self, m) -> np.ndarray:
        """``V m V^dag``."""
        m = np.asarray(m, dtype=complex)
        if self._vectors is None:
            inv = self._inverse_perm
            return m[np.ix_(inv, inv)]
        v = self._vectors
        return v @ m @ v.conj().T

    @cached_property
    def cluster_labels(self) -> np.ndarray:
        """Cluster index of each eigenvalue; consecutive spacings <= tol are merged."""
        if self.dim == 0:
            return np.zeros(0, dtype=int)
        breaks = np.diff(self.eigenvalues) > self.tol
        labels = np.concatenate([[0], np.cumsum(breaks)])
        labels.setflags(write=False)
        return labels

    @property
    def n_clusters(self) -> int:
        return int(self.cluster_labels[-1]) + 1

    @property
    def nondegenerate(self) -> bool:
        return self.n_clusters == self.dim

    @cached_property
    def levels(self) -> np.ndarray:
        """Representative energy of each cluster (mean of its members)."""
        counts = np.bincount(self.cluster_labels)
        return np.bincount(self.cluster_labels, weights=self.eigenvalues) / counts

    def same_cluster(self) -> np.ndarray:
        lab = self.cluster_labels
        return lab[:, None] == lab[None, :]

    def cluster_slices(self) -> list[slice]:
        lab = self.cluster_labels
        starts = np.flatnonzero(np.concatenate([[True], np.diff(lab) != 0]))
        ends = np.concatenate([starts[1:], [self.dim]])
        return [slice(int(s), int(e)) for s, e in zip(starts, ends)]

    @cached_property
    def min_positive_spacing(self) -> float:
        """Smallest spacing between distinct levels (inf for a single level)."""
        lv = self.levels
        return float(np.min(np.diff(lv))) if lv.size > 1 else math.inf

    @cached_property
    def gap_report(self) -> GapReport:
        return gap_report(self)


def _fix_phases(v: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(v), axis=0)
    lead = v[idx, np.arange(v.shape[1])]
    return v * (lead.conj() / np.abs(lead))


def eigendecompose(h, tol: float | None = None) -> SpectralHamiltonian:
    """Diagonalize a Hermitian matrix.

    ``tol`` is the level-clustering tolerance and defaults to
    ``1e-10 * ||h||``. Eigenvectors are phase fixed so that the
    largest-magnitude component of each is real and positive.
    """
    if isinstance(h, SpectralHamiltonian):
        return h
    h = _square(h, "Hamiltonian")
    scale = float(np.max(np.abs(h), initial=0.0))
    dev = float(np.max(np.abs(h - h.conj().T), initial=0.0))
    if dev > VALIDATION_TOL * max(1.0, scale):
        raise ValueError(f"Hamiltonian is not Hermitian (max|H - H^dag| = {dev:.3e})")
    h = (h + h.conj().T) / 2
    off = h.copy()
    np.fill_diagonal(off, 0)
    if not off.any():
        diag = h.diagonal().real
        perm = np.argsort(diag, kind="stable")
        evals = diag[perm]
        vecs = None
    else:
        evals, vecs = np.linalg.eigh(h)
        vecs = _fix_phases(vecs)
        perm = None
    del off
    if tol is None:
        tol = CLUSTER_RTOL * float(np.max(np.abs(evals), initial=0.0))
    return SpectralHamiltonian(h, evals, float(tol), vecs, perm)


def as_spectral(h) -> SpectralHamiltonian:
    return h if isinstance(h, SpectralHamiltonian) else eigendecompose(h)


def gap_report(h, tol: float | None = None) -> GapReport:
    """Check the non-degenerate spectrum and non-degenerate gaps conditions.

    ``min_gap_separation`` is the smallest distance between gap values that
    are distinct at ``tol`` (inf when there are fewer than two such values).
    """
    h = as_spectral(h)
    if tol is None:
        tol = h.tol
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    e = h.eigenvalues
    d = e.size
    spacings = np.diff(e)
    min_spacing = float(spacings.min()) if d > 1 else math.inf
    spec_ok = bool(np.all(spacings > tol))
    if d < 2:
        return GapReport(spec_ok, spec_ok, min_spacing, math.inf, float(tol))
    iu = np.triu_indices(d, k=1)
    gaps = np.sort((e[None, :] - e[:, None])[iu])
    seps = np.diff(gaps)
    gaps_distinct = bool(np.all(seps > tol))
    distinct = seps[seps > tol]
    min_sep = float(distinct.min()) if distinct.size else math.inf
    return GapReport(spec_ok, spec_ok and gaps_distinct, max(min_spacing, 0.0), min_sep, float(tol))


def _check_dims(rho: np.ndarray, h: SpectralHamiltonian) -> None:
    if rho.shape != (h.dim, h.dim):
        raise DimensionError(f"state of shape {rho.shape} does not match H of dim {h.dim}")


def dephase_in_eigenbasis(rho, h) -> np.ndarray:
    """The dephased state expressed in the eigenbasis of ``h``."""
    h = as_spectral(h)
    rho = _square(rho, "rho")
    _check_dims(rho, h)
    r = h.to_eigenbasis(rho)
    if h.nondegenerate:
        return np.diag(np.diag(r))
    return np.where(h.same_cluster(), r, 0)


def dephase(rho, h) -> np.ndarray:
    """Infinite-time average: sum of P_j rho P_j over the spectral projectors of ``h``."""
    h = as_spectral(h)
    return h.from_eigenbasis(dephase_in_eigenbasis(rho, h))


def energy_populations(rho, h) -> np.ndarray:
    """Diagonal of ``rho`` in the eigenbasis (ascending energy order)."""
    h = as_spectral(h)
    rho = _square(rho, "rho")
    _check_dims(rho, h)
    if h._vectors is None:
        return np.asarray(rho.diagonal()[h._perm].real)
    v = h._vectors
    return np.einsum("ki,kl,li->i", v.conj(), rho, v).real


def dephased_spectrum(rho, h) -> np.ndarray:
    """Ascending eigenvalues of the dephased state."""
    h = as_spectral(h)
    if h.nondegenerate:
        return np.sort(energy_populations(rho, h))
    r = h.to_eigenbasis(_square(rho, "rho"))
    vals = [np.linalg.eigvalsh(r[s, s]) for s in h.cluster_slices()]
    return np.sort(np.concatenate(vals))


def dephased_purity(rho, h) -> float:
    """``Tr(omega_H(rho)^2)``."""
    h = as_spectral(h)
    if h.nondegenerate:
        p = energy_populations(rho, h)
        return float(p @ p)
    r = h.to_eigenbasis(_square(rho, "rho"))
    return float(sum(np.sum(np.abs(r[s, s]) ** 2) for s in h.cluster_slices()))


def evolve(rho, h, t: float) -> np.ndarray:
    """``exp(-iHt) rho exp(iHt)``, computed in the eigenbasis."""
    if not math.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    h = as_spectral(h)
    rho = _square(rho, "rho")
    _check_dims(rho, h)
    u = np.exp(-1j * h.eigenvalues * t)
    r = h.to_eigenbasis(rho)
    return h.from_eigenbasis(r * u[:, None] * u.conj()[None, :])


def evolution_operator(h, t: float) -> np.ndarray:
    h = as_spectral(h)
    return h.from_eigenbasis(np.diag(np.exp(-1j * h.eigenvalues * t)))


def noninteracting(h_q, h_r) -> np.ndarray:
    """``H^Q (x) 1 + 1 (x) H^R`` as a dense matrix."""
    hq = h_q.matrix if isinstance(h_q, SpectralHamiltonian) else _square(h_q)
    hr = h_r.matrix if isinstance(h_r, SpectralHamiltonian) else _square(h_r)
    return np.kron(hq, np.eye(hr.shape[0])) + np.kron(np.eye(hq.shape[0]), hr)
