"""Scalar information measures, all in nats.

Rényi divergences follow the Petz form

    D_alpha(rho || tau) = log Tr(rho^alpha tau^(1-alpha)) / (alpha - 1),

which is the convention under which the resilience equals
``D_2(omega_H(rho) || 1/d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qcore import CompositeDims, DimensionError, _square, hermitian_spectrum, partial_trace
from .spectral import (
    as_spectral,
    dephased_purity,
    dephased_spectrum,
    eigendecompose,
    noninteracting,
)

#: eigenvalues below this are treated as exact zeros before taking powers
EIG_CLAMP = 1e-14
#: weight of rho outside supp(tau) above which the divergence is infinite
SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class ResilienceRecord:
    dim: int
    effective_dimension: float
    resilience: float
    second_eigenvalue: float


def _clamped(vals: np.ndarray) -> np.ndarray:
    vals = np.asarray(vals, dtype=float)
    return np.where(vals < EIG_CLAMP, 0.0, vals)


def effective_dimension(rho, h) -> float:
    """``1 / Tr(omega_H(rho)^2)``."""
    return 1.0 / dephased_purity(rho, h)


def resilience(rho, h) -> float:
    """``log(d / d_eff)``: the log-purity of the dephased state, shifted by ``log d``."""
    h = as_spectral(h)
    return math.log(h.dim * dephased_purity(rho, h))


def second_largest_eigenvalue(rho, h) -> float:
    h = as_spectral(h)
    if h.dim < 2:
        raise ValueError("second largest eigenvalue needs dimension >= 2")
    return float(dephased_spectrum(rho, h)[-2])


def resilience_record(rho, h) -> ResilienceRecord:
    h = as_spectral(h)
    p = dephased_spectrum(rho, h)
    purity = float(p @ p)
    return ResilienceRecord(
        dim=h.dim,
        effective_dimension=1.0 / purity,
        resilience=math.log(h.dim * purity),
        second_eigenvalue=float(p[-2]) if h.dim > 1 else 0.0,
    )


def renyi_divergence(rho, tau, alpha: float) -> float:
    """Petz Rényi divergence for ``alpha`` in [0, 2]; ``alpha = 1`` is the relative entropy.

    Returns ``math.inf`` when the support condition fails (``supp rho`` not
    inside ``supp tau`` for ``alpha >= 1``, orthogonal supports for
    ``alpha < 1``).
    """
    if not 0.0 <= alpha <= 2.0:
        raise ValueError(f"alpha must lie in [0, 2], got {alpha}")
    rho = _square(rho, "rho")
    tau = _square(tau, "tau")
    if rho.shape != tau.shape:
        raise DimensionError(f"shape mismatch {rho.shape} vs {tau.shape}")
    lr, vr = np.linalg.eigh(rho)
    lt, vt = np.linalg.eigh(tau)
    lr, lt = _clamped(lr), _clamped(lt)
    overlap = np.abs(vr.conj().T @ vt) ** 2  # overlap[i, j] = |<r_i|t_j>|^2
    supp_t = lt > 0
    if alpha >= 1:
        leak = float(lr @ overlap[:, ~supp_t].sum(axis=1))
        if leak > SUPPORT_TOL:
            return math.inf
    if alpha == 1:
        pos = lr > 0
        s_rho = float(np.sum(lr[pos] * np.log(lr[pos])))
        cross = float(lr @ overlap[:, supp_t] @ np.log(lt[supp_t]))
        return s_rho - cross
    pr = np.zeros_like(lr)
    pr[lr > 0] = lr[lr > 0] ** alpha
    pt = np.zeros_like(lt)
    pt[supp_t] = lt[supp_t] ** (1.0 - alpha)
    q = float(pr @ overlap @ pt)
    if q <= 0.0:
        return math.inf
    return math.log(q) / (alpha - 1.0)


def renyi_entropy(rho, alpha: float) -> float:
    """``S_alpha(rho) = log Tr(rho^alpha) / (1 - alpha)``; limits at 0, 1 and inf."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    return renyi_entropy_of_spectrum(hermitian_spectrum(rho), alpha)


def renyi_entropy_of_spectrum(p, alpha: float) -> float:
    p = _clamped(p)
    p = p[p > 0]
    if alpha == 0:
        return math.log(p.size)
    if alpha == 1:
        return float(-np.sum(p * np.log(p)))
    if math.isinf(alpha):
        return -math.log(float(p.max()))
    return math.log(float(np.sum(p**alpha))) / (1.0 - alpha)


def von_neumann_entropy(rho) -> float:
    return renyi_entropy(rho, 1.0)


def mutual_information(rho_qr, dims) -> float:
    """``S(rho_Q) + S(rho_R) - S(rho_QR)`` for a bipartite state."""
    if not isinstance(dims, CompositeDims):
        dims = CompositeDims(dims)
    if len(dims) != 2:
        raise DimensionError(f"mutual information needs exactly two subsystems, got {dims.dims}")
    rho_qr = _square(rho_qr, "rho_qr")
    rho_q = partial_trace(rho_qr, dims, 0)
    rho_r = partial_trace(rho_qr, dims, 1)
    return von_neumann_entropy(rho_q) + von_neumann_entropy(rho_r) - von_neumann_entropy(rho_qr)


def composite_hamiltonian(h_q, h_r):
    return eigendecompose(noninteracting(h_q, h_r))


def correlation_correction(rho_qr, h_q, h_r, h_qr=None) -> float:
    """``R(rho_QR, H_QR) - R(rho_Q, H_Q) - R(rho_R, H_R)`` for non-interacting ``H_QR``.

    ``h_qr`` may be passed to reuse an existing decomposition of
    ``H_Q (x) 1 + 1 (x) H_R``.
    """
    h_q, h_r = as_spectral(h_q), as_spectral(h_r)
    rho_qr = _square(rho_qr, "rho_qr")
    dims = CompositeDims((h_q.dim, h_r.dim))
    if dims.total != rho_qr.shape[0]:
        raise DimensionError(
            f"H_Q, H_R dims {dims.dims} do not match state of dim {rho_qr.shape[0]}"
        )
    if h_qr is None:
        h_qr = composite_hamiltonian(h_q, h_r)
    rho_q = partial_trace(rho_qr, dims, 0)
    rho_r = partial_trace(rho_qr, dims, 1)
    return resilience(rho_qr, h_qr) - resilience(rho_q, h_q) - resilience(rho_r, h_r)


def alternative_resilience(rho, h) -> float:
    """``D_1(omega_H(rho) || 1/d) = log d - S_1(omega_H(rho))``.

    The von Neumann counterpart of :func:`resilience`; unlike it, it is
    super-additive on correlated states.
    """
    h = as_spectral(h)
    return math.log(h.dim) - renyi_entropy_of_spectrum(dephased_spectrum(rho, h), 1.0)


def microcanonical_resource_bound(k_states: int, local_dim: int, m_parties: int) -> float:
    """Lower bound ``K / D^m`` on the effective dimension reachable with an m-partite resource."""
    if k_states < 1 or local_dim < 1 or m_parties < 0:
        raise ValueError("need k_states >= 1, local_dim >= 1 and m_parties >= 0")
    if m_parties * math.log2(local_dim) <= 1000:
        # exact rational, correctly rounded
        return int(k_states) / int(local_dim) ** int(m_parties)
    return math.exp(math.log(k_states) - m_parties * math.log(local_dim))
