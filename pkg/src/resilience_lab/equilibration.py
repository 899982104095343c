"""Temporal fluctuations of expectation values and of subsystem states.

Closed form for the infinite-time variance
------------------------------------------
In the eigenbasis of ``H``,

    Tr(A (rho(t) - omega)) = sum_{k, l in different levels} c_kl exp(-i (E_k - E_l) t),
    c_kl = rho_kl A_lk.

Squaring and averaging over all times keeps only pairs of terms with equal
frequency. If no two pairs carrying a nonzero ``c_kl`` share a gap the
cross terms vanish and

    Var_H(A, rho) = sum_{k != l} |c_kl|^2.

:func:`variance_exact` evaluates this and refuses when two contributing
pairs have coinciding gaps; :func:`variance_sampled` is the Monte Carlo
route used both as a cross-check and as the fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrics import effective_dimension, second_largest_eigenvalue
from .qcore import CompositeDims, DimensionError, Observable, _square, partial_trace
from .spectral import SpectralHamiltonian, as_spectral, dephase

DEFAULT_SAMPLES = 2000
# relative size below which a coefficient c_kl is treated as absent
_COEF_RTOL = 1e-14


class DegenerateGapError(ValueError):
    """The closed-form variance is not valid for this Hamiltonian and state."""


@dataclass(frozen=True)
class VarianceReport:
    variance_exact: float
    variance_sampled: float
    bound_eq2: float
    bound_p2nd: float
    gaps_ok: bool
    effective_dimension: float
    second_eigenvalue: float
    norm: float

    @property
    def variance(self) -> float:
        return self.variance_exact if self.gaps_ok else self.variance_sampled


@dataclass(frozen=True)
class SubsystemReport:
    avg_trace_distance: float
    bound_eq3: float
    n_samples: int
    t_max: float
    effective_dimension: float

    @property
    def sampling_tolerance(self) -> float:
        return 3.0 / math.sqrt(self.n_samples)


def _matrix(a) -> np.ndarray:
    return a.entries if isinstance(a, Observable) else _square(a, "observable")


def _coefficients(a, rho, h: SpectralHamiltonian) -> np.ndarray:
    """``c_kl = rho_kl A_lk`` in the eigenbasis, zero within degenerate blocks."""
    a = _matrix(a)
    rho = _square(rho, "rho")
    if a.shape != (h.dim, h.dim) or rho.shape != (h.dim, h.dim):
        raise DimensionError(f"operands must be {h.dim}x{h.dim}")
    c = h.to_eigenbasis(rho) * h.to_eigenbasis(a).T
    if h.nondegenerate:
        np.fill_diagonal(c, 0)
        return c
    return np.where(h.same_cluster(), 0, c)


def _support(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scale = float(np.max(np.abs(c), initial=0.0))
    if scale == 0.0:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    return np.nonzero(np.abs(c) > _COEF_RTOL * scale)


def slowest_beat(h) -> float:
    """Smallest nonzero frequency relevant to time averages of ``h`` (inf if static)."""
    h = as_spectral(h)
    rep = h.gap_report
    cands = [x for x in (rep.min_gap_separation, h.min_positive_spacing) if 0 < x < math.inf]
    return min(cands) if cands else math.inf


def default_t_max(h) -> float:
    """``100 / slowest beat``; 1 when ``h`` generates no dynamics."""
    w = slowest_beat(h)
    return 1.0 if math.isinf(w) else 100.0 / w


def variance_exact(a, rho, h) -> float:
    """Infinite-time variance of ``Tr(A rho(t))`` from the closed form.

    Raises :class:`DegenerateGapError` when two contributing index pairs share
    an energy gap; use :func:`variance_sampled` in that case.
    """
    h = as_spectral(h)
    c = _coefficients(a, rho, h)
    k, l = _support(c)
    if k.size > 1:
        gaps = np.sort(h.eigenvalues[k] - h.eigenvalues[l])
        if np.any(np.diff(gaps) <= h.tol):
            raise DegenerateGapError(
                "degenerate energy gaps among contributing pairs; use variance_sampled"
            )
    return float(np.sum(np.abs(c[k, l]) ** 2))


def deviation_samples(a, rho, h, t_max: float, n: int, seed: int = 0) -> np.ndarray:
    """``(Tr A rho(t) - Tr A omega)^2`` at ``n`` uniform random times in ``[0, t_max]``."""
    if n < 2:
        raise ValueError("need at least two samples")
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    h = as_spectral(h)
    c = _coefficients(a, rho, h)
    k, l = _support(c)
    times = np.random.default_rng(int(seed)).uniform(0.0, t_max, n)
    e = h.eigenvalues
    if k.size <= 4 * h.dim:
        phases = np.exp(-1j * np.outer(times, e[k] - e[l]))
        f = (phases @ c[k, l]).real
    else:
        u = np.exp(-1j * np.outer(times, e))
        f = np.einsum("tk,tk->t", u @ c, u.conj()).real
    return f**2


def variance_sampled(a, rho, h, t_max: float, n: int = DEFAULT_SAMPLES, seed: int = 0) -> float:
    return float(np.mean(deviation_samples(a, rho, h, t_max, n, seed)))


def equilibration_bounds(
    a, rho, h, t_max: float | None = None, n: int = DEFAULT_SAMPLES, seed: int = 0
) -> VarianceReport:
    """Variance of ``A`` next to the effective-dimension and second-eigenvalue bounds."""
    h = as_spectral(h)
    a = a if isinstance(a, Observable) else Observable(a)
    gaps_ok = h.gap_report.nondegenerate_gaps
    exact = variance_exact(a, rho, h) if gaps_ok else math.nan
    if t_max is None:
        t_max = default_t_max(h)
    sampled = variance_sampled(a, rho, h, t_max, n, seed)
    norm2 = a.operator_norm**2
    deff = effective_dimension(rho, h)
    p2 = second_largest_eigenvalue(rho, h) if h.dim > 1 else 0.0
    return VarianceReport(
        variance_exact=exact,
        variance_sampled=sampled,
        bound_eq2=norm2 / deff,
        bound_p2nd=3.0 * p2 * norm2,
        gaps_ok=gaps_ok,
        effective_dimension=deff,
        second_eigenvalue=p2,
        norm=a.operator_norm,
    )


def subsystem_bound(d_s: int, d_eff: float) -> float:
    return 0.5 * math.sqrt(d_s**2 / d_eff)


def subsystem_distance_samples(
    rho, h, dims, s_index: int, t_max: float, n: int, seed: int = 0
) -> np.ndarray:
    """Trace distances ``D(rho_S(t), Tr_B omega_H(rho))`` at random times."""
    if not isinstance(dims, CompositeDims):
        dims = CompositeDims(dims)
    if len(dims) != 2 or s_index not in (0, 1):
        raise DimensionError("need a bipartition and s_index in {0, 1}")
    h = as_spectral(h)
    rho = _square(rho, "rho")
    if dims.total != h.dim or rho.shape != (h.dim, h.dim):
        raise DimensionError(f"dims {dims.dims} do not match state/H of dim {h.dim}")
    if n < 1 or not t_max > 0:
        raise ValueError("need n >= 1 and t_max > 0")
    omega_s = partial_trace(dephase(rho, h), dims, s_index)
    r = h.to_eigenbasis(rho)
    v = h.eigenvectors
    times = np.random.default_rng(int(seed)).uniform(0.0, t_max, n)
    out = np.empty(n)
    step = max(1, (1 << 21) // (h.dim * h.dim))
    sub = "tajbj->tab" if s_index == 0 else "tjajb->tab"
    for start in range(0, n, step):
        u = np.exp(-1j * np.outer(times[start : start + step], h.eigenvalues))
        rt = v @ (r[None] * u[:, :, None] * u.conj()[:, None, :]) @ v.conj().T
        m = rt.shape[0]
        rs = np.einsum(sub, rt.reshape(m, dims[0], dims[1], dims[0], dims[1]))
        out[start : start + step] = 0.5 * np.abs(np.linalg.eigvalsh(rs - omega_s)).sum(axis=1)
    return out


def subsystem_equilibration(
    rho,
    h,
    dims,
    s_index: int = 0,
    t_max: float | None = None,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> SubsystemReport:
    """Time-averaged distance of a subsystem from its equilibrium state, with its bound."""
    h = as_spectral(h)
    if not isinstance(dims, CompositeDims):
        dims = CompositeDims(dims)
    if t_max is None:
        t_max = default_t_max(h)
    dist = subsystem_distance_samples(rho, h, dims, s_index, t_max, n, seed)
    deff = effective_dimension(rho, h)
    return SubsystemReport(
        avg_trace_distance=float(np.mean(dist)),
        bound_eq3=subsystem_bound(dims[s_index], deff),
        n_samples=n,
        t_max=float(t_max),
        effective_dimension=deff,
    )
