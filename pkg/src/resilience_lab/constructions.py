"""Explicit state families and the reports built on them.

* twin-peak states ``a |Psi><Psi| + (1 - a) Pi / (d - 2)``: an equal
  superposition of two eigenstates mixed with the flat state on the rest of
  the spectrum; they oscillate forever with amplitude ``a`` at every size;
* microcanonical states, flat on a contiguous window of eigenlevels;
* the Q-side quantities of the catalytic (no second law) construction, the
  super-additivity gap on product states, and the sweep showing that
  entropies with alpha <= 1 cannot control the fluctuations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .channels import UnitalChannel, apply_unital
from .equilibration import DegenerateGapError, default_t_max, variance_exact, variance_sampled
from .metrics import (
    composite_hamiltonian,
    correlation_correction,
    effective_dimension,
    mutual_information,
    renyi_entropy,
    renyi_entropy_of_spectrum,
    resilience,
)
from .qcore import DimensionError, _square, partial_trace
from .spectral import as_spectral, dephased_spectrum, eigendecompose, energy_populations

MAX_EXPLICIT_DIM = 4096


@dataclass(frozen=True)
class TwinPeakParams:
    a: float
    level_1: int = 0
    level_2: int = 1

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError(f"a must lie in [0, 1], got {self.a}")
        if self.level_1 == self.level_2:
            raise ValueError("the two peak levels must differ")


@dataclass(frozen=True)
class MicrocanonicalParams:
    """Either ``gamma`` (window of ``ceil(d**gamma)`` levels) or an explicit ``subspace_dim``."""

    gamma: float | None = None
    subspace_dim: int | None = None
    start: int = 0

    def __post_init__(self):
        if (self.gamma is None) == (self.subspace_dim is None):
            raise ValueError("give exactly one of gamma or subspace_dim")
        if self.gamma is not None and not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")

    def window_size(self, dim: int) -> int:
        if self.subspace_dim is not None:
            return int(self.subspace_dim)
        return microcanonical_dim(dim, self.gamma)


def microcanonical_dim(dim: int, gamma: float) -> int:
    """``ceil(dim**gamma)``, with exact powers recognised despite rounding."""
    x = float(dim) ** gamma
    r = round(x)
    return int(r) if abs(x - r) <= 1e-9 * x else math.ceil(x)


def twin_peak_state(h, p: TwinPeakParams) -> np.ndarray:
    h = as_spectral(h)
    d = h.dim
    if d < 3:
        raise DimensionError("twin-peak states need d >= 3")
    k1, k2 = p.level_1, p.level_2
    if not (0 <= k1 < d and 0 <= k2 < d):
        raise DimensionError(f"levels {k1}, {k2} out of range for d = {d}")
    r = np.zeros((d, d), dtype=complex)
    r[np.diag_indices(d)] = (1.0 - p.a) / (d - 2)
    r[k1, k1] = r[k2, k2] = r[k1, k2] = r[k2, k1] = p.a / 2
    return h.from_eigenbasis(r)


def microcanonical_state(h, p: MicrocanonicalParams) -> np.ndarray:
    h = as_spectral(h)
    k = p.window_size(h.dim)
    if k < 1:
        raise ValueError("empty microcanonical window")
    if p.start < 0 or p.start + k > h.dim:
        raise DimensionError(f"window [{p.start}, {p.start + k}) does not fit in d = {h.dim}")
    w = np.zeros(h.dim)
    w[p.start : p.start + k] = 1.0 / k
    return h.from_eigenbasis(np.diag(w).astype(complex))


# ---------------------------------------------------------------------------
# Rabi witness


@dataclass(frozen=True, eq=False)
class RabiWitness:
    observable: np.ndarray = field(repr=False)
    variance: float
    lower_bound: float
    exact: bool

    @property
    def satisfied(self) -> bool:
        return self.variance >= self.lower_bound - 1e-12


def rabi_observable(h, level_1: int, level_2: int) -> np.ndarray:
    """``|E_1><E_2| + h.c.``, unit operator norm."""
    h = as_spectral(h)
    m = np.zeros((h.dim, h.dim), dtype=complex)
    m[level_1, level_2] = m[level_2, level_1] = 1.0
    return h.from_eigenbasis(m)


def rabi_witness(h, p: TwinPeakParams, seed: int = 0) -> RabiWitness:
    """Persistent oscillation of the twin-peak state, seen through the paired observable.

    Uses the closed-form variance when the chosen gap is unique among the
    contributing pairs and falls back to time sampling otherwise.
    """
    h = as_spectral(h)
    if h.cluster_labels[p.level_1] == h.cluster_labels[p.level_2]:
        raise ValueError("the two peak levels are degenerate; no oscillation to witness")
    rho = twin_peak_state(h, p)
    a_op = rabi_observable(h, p.level_1, p.level_2)
    bound = p.a**2 / 2
    try:
        var = variance_exact(a_op, rho, h)
    except DegenerateGapError:
        var = variance_sampled(a_op, rho, h, default_t_max(h), seed=seed)
        return RabiWitness(a_op, var, bound, exact=False)
    if var < bound - 1e-12:
        raise RuntimeError(f"closed-form Rabi variance {var!r} below a^2/2 = {bound!r}")
    return RabiWitness(a_op, var, bound, exact=True)


# ---------------------------------------------------------------------------
# catalytic construction, Q side


def binary_entropy(a: float) -> float:
    return float(-xlogy(a, a) - xlogy(1 - a, 1 - a))


@dataclass(frozen=True)
class Theorem2Report:
    """Q-side quantities of the catalytic construction, in nats.

    ``deff_rho`` is the effective dimension of the twin-peak state computed
    from its dephased populations ``(a/2, a/2, (1-a)/(d-2), ...)``, which
    tends to ``2/a**2``; ``deff_rho_printed`` is the expression
    ``1/(a**2 + (1-a)**2/(d-2))`` that drops the factor 1/2. ``delta_r`` is the
    exact resilience change ``S_2(sigma) - log deff_rho`` and ``delta_r_lower``
    the reference lower bound ``S_2(sigma) + 2 log a``.
    """

    n: int
    D: int
    a: float
    gamma: float
    subspace_dim: float
    s1_sigma: float
    s2_sigma: float
    s_sigma_ideal: float
    s1_rho: float
    deff_rho: float
    deff_rho_printed: float
    delta_r_lower: float
    delta_r: float
    variance_lower: float
    condition_s1_ok: bool
    explicit: dict | None = None
    explicit_max_error: float | None = None

    @property
    def deff_bound(self) -> float:
        return 1.0 / self.a**2


def _log_dim_minus_two(D: int, n: int) -> float:
    """``log(D**n - 2)`` without forming ``D**n`` as a float."""
    return n * math.log(D) + math.log1p(-2.0 * float(D) ** (-n)) if D**n > 2 else -math.inf


def theorem2_report(
    D: int,
    n: int,
    a: float,
    gamma: float,
    explicit_matrices: bool = False,
    seed: int = 0,
) -> Theorem2Report:
    """Closed-form Q-side quantities of the catalytic construction.

    The initial state is microcanonical on ``ceil(D**(gamma n))`` levels, the
    target a twin-peak state with weight ``a``. With ``explicit_matrices``
    (and ``D**n <= 4096``) both states are built for a random diagonal
    Hamiltonian and every closed form is recomputed from the matrices.
    """
    if D < 2 or n < 1 or not 0 < a < 1 or not 0 < gamma < 1:
        raise ValueError("need D >= 2, n >= 1, 0 < a < 1 and 0 < gamma < 1")
    d = D**n
    if d < 3:
        raise ValueError("need D**n >= 3 for a twin-peak state")
    ideal = gamma * n * math.log(D)
    if ideal < 40 * math.log(2):
        k = microcanonical_dim(d, gamma)
        s_sigma = math.log(k)
    else:
        # ceil() changes log(k) by less than 2**-40 here
        k = math.exp(ideal)
        s_sigma = ideal
    log_dm2 = _log_dim_minus_two(D, n)
    s1_rho = (1 - a) * n * math.log(D) + (1 - a) * math.log1p(-2.0 * float(D) ** (-n)) + binary_entropy(a)
    rest = (1 - a) ** 2 * math.exp(-log_dm2)
    deff = 1.0 / (a**2 / 2 + rest)
    report = dict(
        n=n,
        D=D,
        a=a,
        gamma=gamma,
        subspace_dim=k,
        s1_sigma=s_sigma,
        s2_sigma=s_sigma,
        s_sigma_ideal=ideal,
        s1_rho=s1_rho,
        deff_rho=deff,
        deff_rho_printed=1.0 / (a**2 + rest),
        delta_r_lower=s_sigma + 2 * math.log(a),
        delta_r=s_sigma - math.log(deff),
        variance_lower=a**2 / 2,
        condition_s1_ok=s_sigma <= s1_rho,
    )
    if explicit_matrices:
        if d > MAX_EXPLICIT_DIM:
            raise ValueError(f"explicit matrices need D**n <= {MAX_EXPLICIT_DIM}, got {d}")
        ex = _explicit_theorem2(d, int(k), a, seed)
        closed = {
            "s1_sigma": s_sigma,
            "s2_sigma": s_sigma,
            "s1_rho": s1_rho,
            "deff_rho": deff,
            "delta_r": s_sigma - math.log(deff),
            "p1": a / 2,
            "p2": a / 2,
            "variance": a**2 / 2,
        }
        report["explicit"] = ex
        report["explicit_max_error"] = max(abs(ex[key] - val) for key, val in closed.items())
    return Theorem2Report(**report)


def _explicit_theorem2(d: int, k: int, a: float, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    h = eigendecompose(np.diag(np.sort(rng.uniform(0.0, 1.0, d))).astype(complex))
    sigma = microcanonical_state(h, MicrocanonicalParams(subspace_dim=k, start=(d - k) // 2))
    peaks = TwinPeakParams(a, 0, 1)
    rho = twin_peak_state(h, peaks)
    pops = energy_populations(rho, h)
    out = {
        "s1_sigma": renyi_entropy(sigma, 1.0),
        "s2_sigma": renyi_entropy(sigma, 2.0),
        "s1_rho": renyi_entropy(rho, 1.0),
        "deff_rho": effective_dimension(rho, h),
        "p1": float(pops[0]),
        "p2": float(pops[1]),
        "delta_r": resilience(rho, h) - resilience(sigma, h),
    }
    del sigma, rho
    out["variance"] = rabi_witness(h, peaks).variance
    return out


# ---------------------------------------------------------------------------
# super-additivity and the second-law balance


def superadditivity_gap(rho_q, rho_r, h_q, h_r) -> float:
    """``R(rho_Q (x) rho_R, H_QR) - R(rho_Q, H_Q) - R(rho_R, H_R)``; never negative."""
    rho_q = _square(rho_q, "rho_q")
    rho_r = _square(rho_r, "rho_r")
    if rho_q.shape[0] * rho_r.shape[0] > MAX_EXPLICIT_DIM:
        raise DimensionError(f"composite dimension exceeds {MAX_EXPLICIT_DIM}")
    return correlation_correction(np.kron(rho_q, rho_r), h_q, h_r)


@dataclass(frozen=True)
class SecondLawReport:
    delta_r_q: float
    delta_r_r: float
    correction: float
    mutual_information: float

    @property
    def balance(self) -> float:
        """``-dR^R - dR^Q - C``; nonnegative for every stationary protocol."""
        return -self.delta_r_r - self.delta_r_q - self.correction

    @property
    def second_law_margin(self) -> float:
        """``-dR^R - dR^Q``; nonnegative whenever the output is a product state."""
        return -self.delta_r_r - self.delta_r_q


def second_law_report(sigma_q, sigma_r, h_iq, h_ir, ch: UnitalChannel, h_fq, h_fr) -> SecondLawReport:
    """Resilience bookkeeping for a protocol that keeps the resource."""
    sigma_q = _square(sigma_q, "sigma_q")
    sigma_r = _square(sigma_r, "sigma_r")
    h_iq, h_ir, h_fq, h_fr = (as_spectral(x) for x in (h_iq, h_ir, h_fq, h_fr))
    dims = (sigma_q.shape[0], sigma_r.shape[0])
    rho_qr = apply_unital(ch, np.kron(sigma_q, sigma_r))
    rho_q = partial_trace(rho_qr, dims, 0)
    rho_r = partial_trace(rho_qr, dims, 1)
    return SecondLawReport(
        delta_r_q=resilience(rho_q, h_fq) - resilience(sigma_q, h_iq),
        delta_r_r=resilience(rho_r, h_fr) - resilience(sigma_r, h_ir),
        correction=correlation_correction(rho_qr, h_fq, h_fr, composite_hamiltonian(h_fq, h_fr)),
        mutual_information=mutual_information(rho_qr, dims),
    )


# ---------------------------------------------------------------------------
# alpha <= 1 impossibility sweep


@dataclass(frozen=True)
class ImpossibilityRow:
    n: int
    s1_omega: float
    s_half_omega: float
    variance_lower: float
    explicit: bool
    explicit_error: float


def twin_peak_entropies(a: float, D: int, n: int) -> tuple[float, float]:
    """``(S_1, S_1/2)`` of the dephased twin-peak distribution, in closed form."""
    log_rest = _log_dim_minus_two(D, n)
    s1 = float(-xlogy(a, a / 2) - (1 - a) * (math.log(1 - a) - log_rest)) if a < 1 else math.log(2)
    half = 0.5 * math.log(2 * a) if a > 0 else -math.inf
    rest = 0.5 * (math.log(1 - a) + log_rest) if a < 1 else -math.inf
    return s1, 2.0 * float(np.logaddexp(half, rest))


def impossibility_sweep(
    a: float, n_list: Sequence[int], D: int, explicit: bool = True, seed: int = 0
) -> list[ImpossibilityRow]:
    """Entropies of the dephased twin-peak state next to its constant variance floor.

    Rows with ``D**n <= 4096`` are cross-checked against explicitly built
    matrices when ``explicit`` is set.
    """
    if not 0.0 <= a <= 1.0 or D < 2 or not n_list:
        raise ValueError("need 0 <= a <= 1, D >= 2 and a nonempty n_list")
    rows = []
    for n in n_list:
        if D**n < 3:
            raise ValueError(f"n = {n} gives dimension below 3")
        s1, s_half = twin_peak_entropies(a, D, n)
        err, built = 0.0, False
        if explicit and D**n <= MAX_EXPLICIT_DIM:
            d = D**n
            rng = np.random.default_rng(seed ^ n)
            h = eigendecompose(np.diag(np.sort(rng.uniform(0.0, 1.0, d))).astype(complex))
            p = dephased_spectrum(twin_peak_state(h, TwinPeakParams(a)), h)
            err = max(
                abs(renyi_entropy_of_spectrum(p, 1.0) - s1),
                abs(renyi_entropy_of_spectrum(p, 0.5) - s_half),
            )
            built = True
        rows.append(ImpossibilityRow(n, s1, s_half, a**2 / 2, built, err))
    return rows
