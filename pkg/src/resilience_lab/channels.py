"""Channels: mixtures of unitaries, Kraus sets, dilations and the protocol checks.

A preparation protocol between two fixed Hamiltonians is represented by
the channel it induces; a randomly chosen trajectory is a
:class:`UnitalChannel`, a general local operation a :class:`KrausChannel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .metrics import resilience
from .qcore import (
    CompositeDims,
    DimensionError,
    _square,
    commutator_norm,
    haar_unitary,
    partial_trace,
)
from .spectral import as_spectral, evolution_operator, evolve

STATIONARITY_TOL = 1e-9
UNITARY_TOL = 1e-10
PROBABILITY_TOL = 1e-12
COMPLETENESS_TOL = 1e-10


class NonStationaryError(ValueError):
    """An input state does not commute with its Hamiltonian."""


@dataclass(frozen=True, eq=False)
class UnitalChannel:
    unitaries: tuple[np.ndarray, ...]
    probabilities: np.ndarray

    def __post_init__(self):
        us = tuple(_square(u, "unitary") for u in self.unitaries)
        p = np.asarray(self.probabilities, dtype=float)
        if not us:
            raise ValueError("a mixture needs at least one unitary")
        if p.shape != (len(us),):
            raise ValueError(f"{len(us)} unitaries but {p.size} probabilities")
        if np.any(p < 0) or abs(p.sum() - 1.0) > PROBABILITY_TOL:
            raise ValueError(f"probabilities must be nonnegative and sum to 1, got {p}")
        d = us[0].shape[0]
        eye = np.eye(d)
        for i, u in enumerate(us):
            if u.shape != (d, d):
                raise DimensionError(f"unitary {i} has shape {u.shape}, expected {(d, d)}")
            err = float(np.max(np.abs(u.conj().T @ u - eye)))
            if err > UNITARY_TOL:
                raise ValueError(f"component {i} is not unitary (max|U^dag U - 1| = {err:.2e})")
        object.__setattr__(self, "unitaries", us)
        object.__setattr__(self, "probabilities", p)

    @property
    def dim(self) -> int:
        return self.unitaries[0].shape[0]

    def __call__(self, rho) -> np.ndarray:
        return apply_unital(self, rho)

    def to_kraus(self) -> KrausChannel:
        return KrausChannel(tuple(math.sqrt(p) * u for p, u in zip(self.probabilities, self.unitaries)))


@dataclass(frozen=True, eq=False)
class KrausChannel:
    kraus_ops: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ValueError("a Kraus channel needs at least one operator")
        shape = ops[0].shape
        if any(k.shape != shape or k.ndim != 2 for k in ops):
            raise DimensionError("Kraus operators must share one 2-d shape")
        s = sum(k.conj().T @ k for k in ops)
        err = float(np.max(np.abs(s - np.eye(shape[1]))))
        if err > COMPLETENESS_TOL:
            raise ValueError(f"Kraus operators are not trace preserving (error {err:.2e})")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim_in(self) -> int:
        return self.kraus_ops[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus_ops[0].shape[0]

    def __call__(self, rho) -> np.ndarray:
        return apply_kraus(self, rho)


@dataclass(frozen=True, eq=False)
class StinespringDilation:
    """``Phi(rho) = Tr_anc[U (rho (x) ancilla_state) U^dag]``; system first, ancilla second."""

    ancilla_dim: int
    ancilla_state: np.ndarray
    global_unitary: np.ndarray

    def apply(self, rho) -> np.ndarray:
        rho = _square(rho, "rho")
        d = rho.shape[0]
        u = self.global_unitary
        out = u @ np.kron(rho, self.ancilla_state) @ u.conj().T
        return partial_trace(out, (d, self.ancilla_dim), 0)

    def ancilla_marginal(self, rho) -> np.ndarray:
        rho = _square(rho, "rho")
        u = self.global_unitary
        out = u @ np.kron(rho, self.ancilla_state) @ u.conj().T
        return partial_trace(out, (rho.shape[0], self.ancilla_dim), 1)


def _check_in(rho: np.ndarray, d: int) -> None:
    if rho.shape != (d, d):
        raise DimensionError(f"state of shape {rho.shape} does not match channel dimension {d}")


def apply_unital(ch: UnitalChannel, rho) -> np.ndarray:
    rho = _square(rho, "rho")
    _check_in(rho, ch.dim)
    out = np.zeros_like(rho)
    for p, u in zip(ch.probabilities, ch.unitaries):
        out += p * (u @ rho @ u.conj().T)
    return out


def apply_kraus(ch: KrausChannel, rho) -> np.ndarray:
    rho = _square(rho, "rho")
    _check_in(rho, ch.dim_in)
    return sum(k @ rho @ k.conj().T for k in ch.kraus_ops)


def is_unital(ch: KrausChannel | UnitalChannel, tol: float = COMPLETENESS_TOL) -> bool:
    """True iff ``sum_i K_i K_i^dag`` equals the identity to within ``tol`` in operator norm."""
    if isinstance(ch, UnitalChannel):
        ch = ch.to_kraus()
    if ch.dim_in != ch.dim_out:
        return False
    s = sum(k @ k.conj().T for k in ch.kraus_ops)
    return float(np.linalg.norm(s - np.eye(ch.dim_out), 2)) <= tol


def embed_local_channel(local: KrausChannel, dims, position: int) -> KrausChannel:
    """Lift a channel on factor ``position`` to the whole composite system."""
    if not isinstance(dims, CompositeDims):
        dims = CompositeDims(dims)
    if not 0 <= position < len(dims):
        raise DimensionError(f"position {position} out of range for {len(dims)} subsystems")
    if local.dim_in != dims[position] or local.dim_out != dims[position]:
        raise DimensionError(
            f"local channel acts on dim {local.dim_in}, subsystem {position} has dim {dims[position]}"
        )
    left = np.eye(int(np.prod(dims.dims[:position])))
    right = np.eye(int(np.prod(dims.dims[position + 1 :])))
    return KrausChannel(tuple(np.kron(np.kron(left, k), right) for k in local.kraus_ops))


def dilate_mixture(ch: UnitalChannel) -> StinespringDilation:
    """Controlled-unitary dilation with a classical ancilla ``diag(p)``."""
    k = len(ch.unitaries)
    if k == 0:
        raise ValueError("empty mixture")
    u = np.zeros((ch.dim * k, ch.dim * k), dtype=complex)
    for a, ua in enumerate(ch.unitaries):
        proj = np.zeros((k, k))
        proj[a, a] = 1.0
        u += np.kron(ua, proj)
    return StinespringDilation(k, np.diag(ch.probabilities).astype(complex), u)


# ---------------------------------------------------------------------------
# channel constructors


def identity_channel(dim: int) -> UnitalChannel:
    return UnitalChannel((np.eye(dim, dtype=complex),), np.array([1.0]))


def unitary_channel(u) -> UnitalChannel:
    return UnitalChannel((u,), np.array([1.0]))


def swap_unitary(d_q: int, d_r: int | None = None) -> np.ndarray:
    """Swap of two equal-dimension factors: ``|i, j> -> |j, i>``."""
    d_r = d_q if d_r is None else d_r
    if d_q != d_r:
        raise DimensionError("swap needs equal subsystem dimensions")
    d = d_q
    s = np.zeros((d * d, d * d), dtype=complex)
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    s[(j * d + i).ravel(), (i * d + j).ravel()] = 1.0
    return s


def random_unital(dim: int, n_components: int, rng: np.random.Generator) -> UnitalChannel:
    """Mixture of Haar unitaries with flat-Dirichlet weights."""
    us = tuple(haar_unitary(dim, rng) for _ in range(n_components))
    p = rng.dirichlet(np.ones(n_components))
    return UnitalChannel(us, p / p.sum())


def random_kraus(dim: int, n_kraus: int, rng: np.random.Generator) -> KrausChannel:
    """Random CPTP map from a Haar isometry into ``dim (x) n_kraus``."""
    w = haar_unitary(dim * n_kraus, rng)[:, :dim]
    w = w.reshape(dim, n_kraus, dim)
    return KrausChannel(tuple(w[:, e, :] for e in range(n_kraus)))


def dephasing_channel(h) -> UnitalChannel:
    """The dephasing map of ``h`` as an equal-weight mixture of clock unitaries.

    With ``m`` eigenvalue clusters and ``Z = sum_c exp(2 pi i c / m) P_c``,
    ``(1/m) sum_j Z^j rho Z^-j = sum_c P_c rho P_c``.
    """
    h = as_spectral(h)
    m = h.n_clusters
    phases = np.exp(2j * np.pi * h.cluster_labels / m)
    us = tuple(h.from_eigenbasis(np.diag(phases**j)) for j in range(m))
    return UnitalChannel(us, np.full(m, 1.0 / m))


def evolution_channel(h, s: float) -> UnitalChannel:
    """Conjugation by ``exp(-iHs)``; covariant with respect to ``h``."""
    return unitary_channel(evolution_operator(h, s))


def compose(second: UnitalChannel, first: UnitalChannel) -> UnitalChannel:
    """``second o first`` as a mixture over all pairs of components."""
    us, ps = [], []
    for p2, u2 in zip(second.probabilities, second.unitaries):
        for p1, u1 in zip(first.probabilities, first.unitaries):
            us.append(u2 @ u1)
            ps.append(p2 * p1)
    p = np.array(ps)
    return UnitalChannel(tuple(us), p / p.sum())


# ---------------------------------------------------------------------------
# t-independence


@dataclass(frozen=True)
class TIndependenceRow:
    t: float
    best_t_prime: float
    residual: float


@dataclass(frozen=True)
class TIndependenceReport:
    rows: tuple[TIndependenceRow, ...]
    tol: float
    window: float

    @property
    def holds(self) -> bool:
        return all(r.residual <= self.tol for r in self.rows)

    @property
    def max_residual(self) -> float:
        return max(r.residual for r in self.rows)


_GOLDEN = (math.sqrt(5) - 1) / 2
_BATCH_ENTRIES = 1 << 20


def _distances(x: np.ndarray, y: np.ndarray, energies: np.ndarray, tps: np.ndarray) -> np.ndarray:
    """Trace distances between ``x`` and ``T_t'(y)`` for each ``t'`` (eigenbasis inputs)."""
    d = x.shape[0]
    out = np.empty(tps.size)
    step = max(1, _BATCH_ENTRIES // (d * d))
    for start in range(0, tps.size, step):
        tp = tps[start : start + step]
        u = np.exp(-1j * np.outer(tp, energies))
        diff = x[None] - y[None] * u[:, :, None] * u.conj()[:, None, :]
        out[start : start + step] = 0.5 * np.abs(np.linalg.eigvalsh(diff)).sum(axis=1)
    return out


def _golden_min(f, lo: float, hi: float, f_lo_hi_best: tuple[float, float]) -> tuple[float, float]:
    best_x, best_f = f_lo_hi_best
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    e = a + _GOLDEN * (b - a)
    fc, fe = f(c), f(e)
    for _ in range(200):
        if b - a <= 1e-15 * max(1.0, abs(a)):
            break
        if fc < fe:
            b, e, fe = e, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, e, fe
            e = a + _GOLDEN * (b - a)
            fe = f(e)
    for x, fx in ((c, fc), (e, fe)):
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def check_t_independence(
    ch: UnitalChannel,
    sigma,
    h_i,
    h_f,
    t_grid: Sequence[float],
    tol: float = 1e-10,
    n_coarse: int = 10_000,
    n_refine: int = 3,
) -> TIndependenceReport:
    """For each ``t`` search the ``t'`` minimizing ``D(Lambda(T_t(sigma)), T_t'(Lambda(sigma)))``.

    The search scans ``n_coarse`` points of ``[0, 2 pi / min level spacing of h_f]``
    and refines the ``n_refine`` best grid points by golden-section search.
    """
    t_grid = [float(t) for t in t_grid]
    if not t_grid:
        raise ValueError("t_grid must be nonempty")
    h_i, h_f = as_spectral(h_i), as_spectral(h_f)
    sigma = _square(sigma, "sigma")
    if not (ch.dim == h_i.dim == h_f.dim == sigma.shape[0]):
        raise DimensionError("channel, state and Hamiltonians must share one dimension")
    energies = h_f.eigenvalues
    y = h_f.to_eigenbasis(apply_unital(ch, sigma))
    spacing = h_f.min_positive_spacing
    window = 0.0 if math.isinf(spacing) else 2 * math.pi / spacing
    grid = np.linspace(0.0, window, n_coarse) if window > 0 else np.zeros(1)
    rows = []
    for t in t_grid:
        x = h_f.to_eigenbasis(apply_unital(ch, evolve(sigma, h_i, t)))
        vals = _distances(x, y, energies, grid)
        i0 = int(np.argmin(vals))
        best = (float(grid[i0]), float(vals[i0]))
        if window > 0:

            def f(tp: float) -> float:
                return float(_distances(x, y, energies, np.array([tp]))[0])

            for i in np.argsort(vals, kind="stable")[:n_refine]:
                lo = float(grid[max(i - 1, 0)])
                hi = float(grid[min(i + 1, grid.size - 1)])
                cand = _golden_min(f, lo, hi, (float(grid[i]), float(vals[i])))
                if cand[1] < best[1]:
                    best = cand
        rows.append(TIndependenceRow(t, best[0], best[1]))
    return TIndependenceReport(tuple(rows), tol, window)


# ---------------------------------------------------------------------------
# resource bounds


def _require_stationary(state: np.ndarray, h, name: str, tol: float) -> None:
    err = commutator_norm(state, as_spectral(h).matrix)
    if err > tol:
        raise NonStationaryError(f"{name} is not stationary: max|[sigma, H]| = {err:.2e} > {tol:.1e}")


@dataclass(frozen=True, eq=False)
class Theorem1Check:
    delta_r_q: float
    resource_resilience: float
    slack: float
    rho_qr: np.ndarray = field(repr=False)

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-9


def verify_theorem1(
    sigma_q,
    sigma_r,
    h_iq,
    h_ir,
    ch: UnitalChannel,
    h_fq,
    h_fr=None,
    stationarity_tol: float = STATIONARITY_TOL,
) -> Theorem1Check:
    """Resilience gained by Q versus the resilience held by the resource R.

    ``h_fr`` is accepted for symmetry with the protocol description; only
    ``h_fq`` enters the bound.
    """
    sigma_q = _square(sigma_q, "sigma_q")
    sigma_r = _square(sigma_r, "sigma_r")
    h_iq, h_ir, h_fq = as_spectral(h_iq), as_spectral(h_ir), as_spectral(h_fq)
    _require_stationary(sigma_q, h_iq, "sigma_q", stationarity_tol)
    _require_stationary(sigma_r, h_ir, "sigma_r", stationarity_tol)
    dims = (sigma_q.shape[0], sigma_r.shape[0])
    if ch.dim != dims[0] * dims[1]:
        raise DimensionError(f"channel dim {ch.dim} does not match {dims[0]} x {dims[1]}")
    rho_qr = apply_unital(ch, np.kron(sigma_q, sigma_r))
    rho_q = partial_trace(rho_qr, dims, 0)
    delta = resilience(rho_q, h_fq) - resilience(sigma_q, h_iq)
    r_res = resilience(sigma_r, h_ir)
    return Theorem1Check(delta, r_res, r_res - delta, rho_qr)


@dataclass(frozen=True)
class Corollary2Check:
    delta_r: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.delta_r <= self.bound + 1e-9


def verify_corollary2(
    sigma_q,
    h_iq,
    local: KrausChannel,
    position: int,
    dims,
    h_fq,
    stationarity_tol: float = STATIONARITY_TOL,
) -> Corollary2Check:
    """Change of resilience under a channel acting on one factor only, against ``log d_X``."""
    sigma_q = _square(sigma_q, "sigma_q")
    if not isinstance(dims, CompositeDims):
        dims = CompositeDims(dims)
    if dims.total != sigma_q.shape[0]:
        raise DimensionError(f"dims {dims.dims} do not match state of dim {sigma_q.shape[0]}")
    h_iq, h_fq = as_spectral(h_iq), as_spectral(h_fq)
    _require_stationary(sigma_q, h_iq, "sigma_q", stationarity_tol)
    rho = apply_kraus(embed_local_channel(local, dims, position), sigma_q)
    delta = resilience(rho, h_fq) - resilience(sigma_q, h_iq)
    return Corollary2Check(delta, math.log(dims[position]))
