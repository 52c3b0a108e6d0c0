"""Sensing-centric and trade-off waveform designs for a MIMO dual-function
transmitter.

Covers the classical baselines: an omnidirectional covariance template, a
beampattern-matched directional template, the covariance-constrained MUI
minimizer (an orthogonal-Procrustes problem solved by one SVD), the weighted
radar/communication trade-off under a total power constraint (a trust-region
subproblem solved exactly through the secular equation), the epsilon-constraint
variants obtained by bisecting the trade-off weight, and the zero-interference
genie rate bound.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, steering_grid
from .metrics import RateReport, _as_matrix, mui_power, sum_rate

PROVENANCES = (
    "omni",
    "directional",
    "tradeoff",
    "epsilon_comm",
    "epsilon_sens",
    "learned",
    "genie",
)


@dataclass(frozen=True)
class CovarianceTemplate:
    """Target transmit covariance: Hermitian PSD with trace equal to power."""

    matrix: np.ndarray
    power: float

    def __post_init__(self):
        C = np.asarray(self.matrix, dtype=complex)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise ValueError("covariance template must be square")
        if self.power <= 0:
            raise ValueError("power must be positive")
        if np.linalg.norm(C - C.conj().T) > 1e-8 * max(1.0, np.linalg.norm(C)):
            raise ValueError("covariance template must be Hermitian")
        if abs(np.trace(C).real - self.power) > 1e-8 * max(1.0, self.power):
            raise ValueError("trace must equal the power budget")
        if np.linalg.eigvalsh((C + C.conj().T) / 2).min() < -1e-8:
            raise ValueError("covariance template must be PSD")
        object.__setattr__(self, "matrix", C)

    @property
    def num_antennas(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class WaveformDesign:
    """A space-time transmit frame together with its power budget and origin."""

    X: np.ndarray
    power: float
    provenance: str

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        X = np.asarray(self.X, dtype=complex)
        if X.ndim != 2:
            raise ValueError("waveform must be a matrix")
        avg = np.linalg.norm(X) ** 2 / X.shape[1]
        # solver outputs meet the budget exactly; network outputs only promise
        # the inequality (projection may leave them inside the ball)
        if self.provenance == "learned":
            violated = avg > (1 + 1e-6) * self.power
        else:
            violated = abs(avg - self.power) > 1e-6 * self.power
        if violated:
            raise ValueError("waveform violates the power budget")
        object.__setattr__(self, "X", X)

    @property
    def frame_length(self) -> int:
        return self.X.shape[1]


def _as_waveform(X) -> np.ndarray:
    if isinstance(X, WaveformDesign):
        return X.X
    return np.asarray(X, dtype=complex)


# ------------------------------------------------------------- sensing-centric


def reference_covariance_omni(total_power: float, num_antennas: int) -> CovarianceTemplate:
    """Isotropic template (P/M) I: flat transmit beampattern."""
    C = (total_power / num_antennas) * np.eye(num_antennas, dtype=complex)
    return CovarianceTemplate(C, total_power)


def _project_psd_trace(C: np.ndarray, power: float) -> np.ndarray:
    # projection onto {C >= 0, tr C = power}: clip the spectrum and rebalance
    # the trace (closed form of the alternating clip / trace-shift loop)
    lam, U = np.linalg.eigh((C + C.conj().T) / 2)
    lam_sorted = np.sort(lam)[::-1]
    csum = np.cumsum(lam_sorted)
    rho = 0
    for i in range(len(lam)):
        if lam_sorted[i] - (csum[i] - power) / (i + 1) > 0:
            rho = i
    shift = (csum[rho] - power) / (rho + 1)
    lam = np.maximum(lam - shift, 0.0)
    return (U * lam) @ U.conj().T


def directional_covariance(target_angles, total_power: float, geom: ArrayGeometry,
                           grid=None, mask_halfwidth: float = np.deg2rad(5.0),
                           mask_height: float | None = None,
                           max_iters: int = 8000, tol: float = 1e-13) -> CovarianceTemplate:
    """Least-squares beampattern matching over the PSD trace-power set.

    Fits v(theta)^H C v(theta) to a rectangular mask around each requested
    target by accelerated projected gradient descent (monotone-restart FISTA
    with backtracking). The default mask height 4*M*P/n sits well above the
    attainable gain, which makes the fit concentrate one dominant lobe per
    target instead of splitting into in-mask ripple.
    """
    targets = np.atleast_1d(np.asarray(target_angles, dtype=float))
    if targets.size == 0:
        raise ValueError("need at least one target direction")
    if grid is None:
        grid = np.deg2rad(np.arange(-90.0, 91.0))
    grid = np.asarray(grid, dtype=float)
    M = geom.num_antennas
    if mask_height is None:
        mask_height = 4.0 * total_power * M / targets.size

    V = steering_grid(grid, geom)  # M x A
    dist = np.min(np.abs(grid[:, None] - targets[None, :]), axis=1)
    desired = np.where(dist <= mask_halfwidth, mask_height, 0.0)

    def f_and_g(Cm):
        p = np.einsum("ma,mn,na->a", V.conj(), Cm, V).real
        r = p - desired
        return float(r @ r), (V * (2.0 * r)) @ V.conj().T

    C = reference_covariance_omni(total_power, M).matrix
    Z = C
    t = 1.0
    step = 1.0 / (2.0 * grid.size * M)
    prev_obj = np.inf
    for it in range(max_iters):
        fz, gz = f_and_g(Z)
        while True:  # backtracking on the local quadratic upper bound
            Cn = _project_psd_trace(Z - step * gz, total_power)
            move = Cn - Z
            obj, _ = f_and_g(Cn)
            if obj <= fz + np.vdot(gz, move).real + np.linalg.norm(move) ** 2 / (2 * step) + 1e-12:
                break
            step *= 0.5
        step *= 1.3
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        if obj > prev_obj:  # restart momentum when it overshoots
            Z, t = Cn, 1.0
        else:
            Z, t = Cn + ((t - 1.0) / t_next) * (Cn - C), t_next
        if it >= 50 and abs(prev_obj - obj) <= tol * max(1.0, obj):
            return CovarianceTemplate(Cn, total_power)
        C, prev_obj = Cn, obj
    raise RuntimeError(
        f"beampattern matching did not converge in {max_iters} iterations "
        f"(residual {prev_obj:.3e})")


def _hermitian_sqrt(C: np.ndarray) -> np.ndarray:
    lam, U = np.linalg.eigh((C + C.conj().T) / 2)
    return (U * np.sqrt(np.maximum(lam, 0.0))) @ U.conj().T


def procrustes_waveform(template: CovarianceTemplate, H, D, tau_d: int,
                        provenance: str = "omni") -> WaveformDesign:
    """MUI-optimal waveform under an exact covariance constraint.

    Minimizes ||H X - D||_F over all X with (1/tau_d) X X^H equal to the
    template; the optimum is the polar factor of F H^H D scaled back through
    the Hermitian square root F of the template.
    """
    Hm = _as_matrix(H)
    D = np.asarray(D, dtype=complex)
    M = template.num_antennas
    if tau_d < M:
        raise ValueError("frame length must be at least the antenna count")
    if D.shape != (Hm.shape[0], tau_d):
        raise ValueError("D must be K x tau_d")
    F = _hermitian_sqrt(template.matrix)
    U, _, Vh = np.linalg.svd(F @ Hm.conj().T @ D)
    X = np.sqrt(tau_d) * F @ U @ Vh[:M, :]
    return WaveformDesign(X, template.power, provenance)


# ----------------------------------------------------------------- trade-off


def _secular_solve(lam: np.ndarray, rho: np.ndarray, target: float) -> float:
    """Root of sum_i rho_i / (lam_i + mu)^2 = target on (-lam_min, inf)."""

    def phi(mu):
        return float(np.sum(rho / (lam + mu) ** 2))

    lam_min = lam.min()
    scale = max(1.0, abs(lam_min))
    lo = -lam_min + 1e-14 * scale
    hi = -lam_min + scale
    grew = 0
    while phi(hi) > target:
        hi = -lam_min + (hi + lam_min) * 2.0
        grew += 1
        if grew > 200:
            raise RuntimeError("secular bisection failed to bracket the root")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tradeoff_design(H, D, X0, weight: float, total_power: float) -> WaveformDesign:
    """Global minimizer of eta*||HX-D||^2 + (1-eta)*||X-X0||^2 on the power
    sphere ||X||_F^2 = tau_d * P.

    The stationarity system (A + mu I) X = B with A = eta H^H H + (1-eta) I is
    solved exactly: one eigendecomposition of A, then bisection on the secular
    equation for the multiplier mu that meets the power budget.
    """
    if not 0.0 <= weight <= 1.0:
        raise ValueError("weight must lie in [0, 1]")
    Hm = _as_matrix(H)
    D = np.asarray(D, dtype=complex)
    X0m = _as_waveform(X0)
    if Hm.shape[1] != X0m.shape[0] or D.shape != (Hm.shape[0], X0m.shape[1]):
        raise ValueError("dimension mismatch between H, D, X0")
    M, tau_d = X0m.shape
    target = tau_d * total_power

    A = weight * Hm.conj().T @ Hm + (1.0 - weight) * np.eye(M)
    B = weight * Hm.conj().T @ D + (1.0 - weight) * X0m
    if np.linalg.norm(B) == 0.0:
        warnings.warn("degenerate trade-off objective; returning a power-"
                      "feasible reference", stacklevel=2)
        X = X0m if np.linalg.norm(X0m) > 0 else np.eye(M, tau_d, dtype=complex)
        X = X * np.sqrt(target) / np.linalg.norm(X)
        return WaveformDesign(X, total_power, "tradeoff")

    lam, U = np.linalg.eigh((A + A.conj().T) / 2)
    W = U.conj().T @ B
    rho = np.linalg.norm(W, axis=1) ** 2

    # hard case: no weight on the minimal eigenspace and the boundary value
    # already undershoots the budget; fill the gap inside that eigenspace
    lam_min = lam.min()
    min_space = lam - lam_min < 1e-12 * max(1.0, abs(lam_min))
    pos = ~min_space
    boundary = float(np.sum(rho[pos] / (lam[pos] - lam_min) ** 2)) if pos.any() else 0.0
    if rho[min_space].sum() < 1e-20 * max(1.0, rho.sum()) and boundary <= target:
        coeff = np.zeros_like(W)
        coeff[pos] = W[pos] / (lam[pos] - lam_min)[:, None]
        deficit = target - boundary
        fill = np.zeros_like(W)
        fill[np.argmax(min_space)] = np.sqrt(deficit / tau_d)
        X = U @ (coeff + fill)
    else:
        mu = _secular_solve(lam, rho, target)
        X = U @ (W / (lam + mu)[:, None])
    X = X * np.sqrt(target) / np.linalg.norm(X)  # kill bisection roundoff
    return WaveformDesign(X, total_power, "tradeoff")


def epsilon_design(H, D, X0, bound: float, mode: str, total_power: float,
                   weight_tol: float = 1e-12):
    """Epsilon-constraint designs by bisection on the trade-off weight.

    comm_priority: minimize MUI subject to ||X - X0||^2 <= bound.
    sens_priority: minimize ||X - X0||^2 subject to ||HX - D||^2 <= bound.
    Returns (design, slack) where slack = bound - achieved constraint value.
    """
    if bound <= 0:
        raise ValueError("bound must be positive")
    if mode not in ("comm_priority", "sens_priority"):
        raise ValueError("mode must be comm_priority or sens_priority")
    Hm = _as_matrix(H)
    D = np.asarray(D, dtype=complex)
    X0m = _as_waveform(X0)

    def constraint(X):
        if mode == "comm_priority":
            return float(np.linalg.norm(X - X0m) ** 2)
        return mui_power(Hm, X, D)

    # the constrained metric worsens monotonically toward its priority extreme
    best_eta = 1.0 if mode == "comm_priority" else 0.0
    worst_eta = 1.0 - best_eta
    provenance = "epsilon_comm" if mode == "comm_priority" else "epsilon_sens"

    at_best = tradeoff_design(Hm, D, X0m, best_eta, total_power)
    if constraint(at_best.X) <= bound:
        design = WaveformDesign(at_best.X, total_power, provenance)
        return design, bound - constraint(at_best.X)
    at_worst = tradeoff_design(Hm, D, X0m, worst_eta, total_power)
    floor = constraint(at_worst.X)
    if floor > bound:
        raise ValueError(
            f"epsilon infeasible: minimal achievable constraint is {floor:.6e}")

    # at_best violates the bound and at_worst satisfies it; bisect the weight,
    # keeping `feas` on the satisfied side and pushing it toward best_eta
    feas, infeas = worst_eta, best_eta
    while abs(infeas - feas) > weight_tol:
        mid = 0.5 * (feas + infeas)
        X = tradeoff_design(Hm, D, X0m, mid, total_power).X
        if constraint(X) <= bound:
            feas = mid
        else:
            infeas = mid
    final = tradeoff_design(Hm, D, X0m, feas, total_power)
    design = WaveformDesign(final.X, total_power, provenance)
    return design, bound - constraint(final.X)


def genie_rate(D, noise_var: float) -> RateReport:
    """Interference-free upper bound: SINR_k = E|D_kq|^2 / sigma^2."""
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    D = np.asarray(D, dtype=complex)
    gam = np.mean(np.abs(D) ** 2, axis=1) / noise_var
    return RateReport(per_user_sinr=gam, sum_rate=sum_rate(gam))
