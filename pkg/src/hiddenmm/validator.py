"""Pre-flight checkers for the initialization, width, and data conditions
that the convergence guarantees assume, with per-inequality margins.

Every unspecified universal constant collapses into a user-visible slack
knob (default 1); margins make the dependence transparent rather than hiding
it.  Checks report, they never throw.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .players import Activation

__all__ = [
    "InitCheck",
    "InitReport",
    "check_input_game_init",
    "experiment_init_sigmas",
    "check_neural_game_init",
    "data_spectrum",
    "hermite_coeffs",
    "neural_spectral_bounds",
]


@dataclass(frozen=True)
class InitCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_jsonable(self) -> dict:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
            "margin": self.margin,
        }


@dataclass
class InitReport:
    """Conjunction of inequality checks plus the constants they were
    evaluated with; re-evaluating from constants_used reproduces margins."""

    checks: list[InitCheck] = field(default_factory=list)
    constants_used: dict = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return all(c.holds for c in self.checks)

    def failing(self) -> list[InitCheck]:
        return [c for c in self.checks if not c.holds]

    def to_jsonable(self) -> dict:
        return {
            "overall": self.overall,
            "checks": [c.to_jsonable() for c in self.checks],
            "constants_used": self.constants_used,
        }

    def table(self) -> str:
        w = max([len(c.name) for c in self.checks] + [5])
        lines = [f"{'check':<{w}}  {'lhs':>13} {'rhs':>13} {'margin':>13}  holds"]
        for c in self.checks:
            lines.append(
                f"{c.name:<{w}}  {c.lhs:13.6g} {c.rhs:13.6g} {c.margin:13.6g}  {'yes' if c.holds else 'NO'}"
            )
        lines.append(f"overall: {'PASS' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def _variance_bracket(s1: float, norm: float, d1: int, C: float) -> float:
    return 0.5 - s1 * norm * math.sqrt(C * d1 / math.pi)


def check_input_game_init(
    s1F: float,
    s2F: float,
    s1G: float,
    s2G: float,
    d1F: int,
    d1G: int,
    theta0_norm: float,
    phi0_norm: float,
    eps: float,
    sigma_max_A: float,
    C: float = 1.0,
    slack: float = 1.0,
    d0F: int | None = None,
    d2F: int | None = None,
    d0G: int | None = None,
    d2G: int | None = None,
) -> InitReport:
    """Evaluate the input-game initialization system: the two variance
    conditions, the two regularizer-scaled 3.5-power conditions, the two
    coupling-scaled 2.5-power conditions, and (when the dims are supplied)
    the width requirements d1 >= 256 * max(d0, d2).

    slack stands in for the unpinned universal constants and multiplies the
    right-hand sides of the power conditions.
    """
    rep = InitReport(
        constants_used={
            "C": C,
            "slack": slack,
            "eps": eps,
            "sigma_max_A": sigma_max_A,
            "s1F": s1F,
            "s2F": s2F,
            "s1G": s1G,
            "s2G": s2G,
            "d1F": d1F,
            "d1G": d1G,
            "theta0_norm": theta0_norm,
            "phi0_norm": phi0_norm,
        }
    )
    ck = rep.checks.append
    ck(InitCheck("variance_F", s1F**2, math.pi / (4.0 * C * d1F * theta0_norm**2)))
    ck(InitCheck("variance_G", s1G**2, math.pi / (4.0 * C * d1G * phi0_norm**2)))
    brF = _variance_bracket(s1F, theta0_norm, d1F, C)
    brG = _variance_bracket(s1G, phi0_norm, d1G, C)
    # power conditions blow up as the bracket closes; a closed bracket is an
    # automatic failure reported with infinite lhs
    lhsF = s1F**4 * s2F**2 * theta0_norm / brF**2 if brF > 0 else float("inf")
    lhsG = s1G**4 * s2G**2 * phi0_norm / brG**2 if brG > 0 else float("inf")
    ck(InitCheck("reg_power_F", lhsF, slack * math.pi / (eps * d1F**3.5)))
    ck(InitCheck("reg_power_G", lhsG, slack * math.pi / (eps * d1G**3.5)))
    lhsFA = (s1G * s2G) * (s1F**3 * s2F) * theta0_norm / brF**2 if brF > 0 else float("inf")
    lhsGA = (s1F * s2F) * (s1G**3 * s2G) * phi0_norm / brG**2 if brG > 0 else float("inf")
    ck(InitCheck("coupling_power_F", lhsFA, slack * math.pi / (sigma_max_A * d1F**2.5)))
    ck(InitCheck("coupling_power_G", lhsGA, slack * math.pi / (sigma_max_A * d1G**2.5)))
    if d0F is not None and d2F is not None:
        ck(InitCheck("width_F", 256.0 * max(d0F, d2F), float(d1F)))
    if d0G is not None and d2G is not None:
        ck(InitCheck("width_G", 256.0 * max(d0G, d2G), float(d1G)))
    return rep


def experiment_init_sigmas(d1: int, slack: float = 1.0) -> tuple[float, float]:
    """Layer standard deviations for the input-game experiments:
    sigma1 = slack * min(d1^-1/2, d1^-7/8, 1), sigma2 = 1."""
    if d1 < 1:
        raise ValueError("d1 must be at least 1")
    s1 = slack * min(d1**-0.5, d1**-0.875, 1.0)
    return float(s1), 1.0


def check_neural_game_init(
    s1: float,
    s2: float,
    d0: int,
    d1: int,
    n: int,
    mu: float,
    kappa: float = 1.0,
) -> InitReport:
    """Parameter-game initialization checks for one player: the product
    condition s1*s2 <= kappa/sqrt(d0*d1) and the width requirement
    d1 >= kappa * mu^2 * n^3 / d0 (kappa absorbs constants and log factors)."""
    rep = InitReport(
        constants_used={"kappa": kappa, "s1": s1, "s2": s2, "d0": d0, "d1": d1, "n": n, "mu": mu}
    )
    rep.checks.append(InitCheck("sigma_product", s1 * s2, kappa / math.sqrt(d0 * d1)))
    rep.checks.append(InitCheck("width", kappa * mu**2 * n**3 / d0, float(d1)))
    return rep


def data_spectrum(
    X: np.ndarray,
    t: int = 1,
    memory_budget_bytes: int = 2 << 30,
) -> tuple[float, float]:
    """(sigma_max(X), sigma_min of the t-fold columnwise self-Kronecker power).

    The power matrix has shape (d^t, n) with column j the t-fold Kronecker
    product of sample row j with itself; its least singular value measures
    how diverse the sample directions are.  Rows are normalized to unit norm
    first (with a warning when that changes them).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    if n < d:
        raise ValueError(f"need at least as many samples as dimensions (n={n}, d={d})")
    if t < 1:
        raise ValueError("t must be at least 1")
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero sample row cannot be normalized")
    if np.any(np.abs(norms - 1.0) > 1e-12):
        warnings.warn("normalizing sample rows to unit norm", stacklevel=2)
        X = X / norms[:, None]
    needed = (d**t) * n * 8
    if needed > memory_budget_bytes:
        raise MemoryError(
            f"Khatri-Rao power needs d^t*n = {d}^{t}*{n} entries "
            f"({needed} bytes) exceeding the {memory_budget_bytes} byte budget"
        )
    cols = np.empty((d**t, n))
    for j in range(n):
        col = X[j]
        for _ in range(t - 1):
            col = np.kron(col, X[j])
        cols[:, j] = col
    sigma_max_X = float(np.linalg.svd(X, compute_uv=False)[0])
    sigma_min_kr = float(np.linalg.svd(cols, compute_uv=False)[-1])
    return sigma_max_X, sigma_min_kr


def hermite_coeffs(act: Activation, k_max: int, nodes: int = 160) -> np.ndarray:
    """Coefficients of the activation in the orthonormal Hermite basis under
    the standard Gaussian: c_i = E[psi(Z) He_i(Z)] / sqrt(i!).

    Computed by Gauss-Hermite quadrature (probabilists' normalization); the
    node count is doubled as a convergence check and 1e-9 disagreement is an
    error.
    """
    if k_max > 16:
        raise ValueError("k_max is capped at 16")
    if nodes < 128:
        nodes = 128

    def compute(m: int) -> np.ndarray:
        x, w = np.polynomial.hermite_e.hermegauss(m)
        w = w / np.sqrt(2.0 * np.pi)  # weights of E[.] under N(0,1)
        vals = act.fn(x)
        out = np.empty(k_max + 1)
        for i in range(k_max + 1):
            he = np.polynomial.hermite_e.hermeval(x, [0.0] * i + [1.0])
            out[i] = np.sum(w * vals * he) / np.sqrt(math.factorial(i))
        return out

    c = compute(nodes)
    c2 = compute(2 * nodes)
    if np.max(np.abs(c - c2)) > 1e-9:
        raise ArithmeticError("quadrature did not converge at the node-doubling check")
    return c2


def hermite_tail_energy(act: Activation, coeffs: np.ndarray, nodes: int = 320) -> float:
    """Residual E[psi(Z)^2] - sum(c_i^2): the squared norm of the part of the
    activation beyond the computed expansion order."""
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / np.sqrt(2.0 * np.pi)
    total = float(np.sum(w * act.fn(x) ** 2))
    return max(0.0, total - float(np.sum(np.asarray(coeffs) ** 2)))


def neural_spectral_bounds(
    coeffs: np.ndarray,
    s1: float,
    s2: float,
    d1: int,
    n: int,
    X_spectrum: tuple[float, float],
    act: Activation,
    deltas: tuple[float, float] = (0.0, 0.0),
    r1: float = 1.0,
    r2: float = 1.0,
    t: int = 1,
    c_tail_sq: float = 0.0,
) -> tuple[float, float]:
    """Closed-form bracket for the parameter-Jacobian spectrum of a random
    two-layer net on n samples.

    lower = s1^r1 * sqrt((1-d1_) * c_t^2/t! * d1) * sigma_min(X power)
    upper = s2*dot_max*sigma_max(X)*sqrt(d1)
            + s1^r1*sqrt((1+d2_)*(c_1^2 + tail)*d1)*sigma_max(X)
            + s1^r2*|c_0|*sqrt((1+d2_)*d1*n)

    c_tail_sq is the residual expansion energy beyond the computed orders
    (see hermite_tail_energy); deltas are the concentration slack pair.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if t >= len(coeffs):
        raise ValueError("need the Hermite coefficient of order t")
    d1_, d2_ = deltas
    if not (0 <= d1_ < 1 and d2_ >= 0):
        raise ValueError("delta_1 must be in [0, 1) and delta_2 nonnegative")
    sigma_max_X, sigma_min_kr = X_spectrum
    c_t = coeffs[t]
    lower = s1**r1 * math.sqrt((1.0 - d1_) * c_t**2 / math.factorial(t) * d1) * sigma_min_kr
    c1sq = coeffs[1] ** 2 if len(coeffs) > 1 else 0.0
    upper = (
        s2 * act.dot_psi_max * sigma_max_X * math.sqrt(d1)
        + s1**r1 * math.sqrt((1.0 + d2_) * (c1sq + c_tail_sq) * d1) * sigma_max_X
        + s1**r2 * abs(coeffs[0]) * math.sqrt((1.0 + d2_) * d1 * n)
    )
    return float(lower), float(upper)
