"""Two-layer neural maps: forward/Jacobian evaluation, Gaussian initialization,
and closed-form spectral / smoothness certificates for the random-init regime.

A player is the map  x -> W2 @ psi(W1 @ x)  with a smooth activation psi.
All operations are pure; nets are immutable after construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erf, expit

__all__ = [
    "Activation",
    "TwoLayerNet",
    "SpectralCertificate",
    "make_activation",
    "init_gaussian",
    "forward",
    "jacobian_input",
    "jacobian_params",
    "spectral_bounds_input",
    "smoothness_input",
    "smoothness_data",
    "empirical_spectrum",
    "certify_input_jacobian",
]

_SQRT2 = float(np.sqrt(2.0))
_SQRT_2PI = float(np.sqrt(2.0 * np.pi))


def norm_cdf(x):
    return 0.5 * (1.0 + erf(np.asarray(x) / _SQRT2))


def norm_pdf(x):
    x = np.asarray(x)
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def gelu(x):
    """x * Phi(x), the Gaussian-CDF gated linear unit."""
    x = np.asarray(x)
    return x * norm_cdf(x)


def gelu_deriv(x):
    x = np.asarray(x)
    return norm_cdf(x) + x * norm_pdf(x)


def gelu_second_deriv(x):
    x = np.asarray(x)
    return (2.0 - x * x) * norm_pdf(x)


def softplus_shifted(x):
    """log(1 + e^x) - log 2, shifted so the value at 0 is exactly 0."""
    return np.logaddexp(0.0, np.asarray(x)) - np.log(2.0)


def softplus_deriv(x):
    return expit(np.asarray(x))


def softplus_second_deriv(x):
    s = expit(np.asarray(x))
    return s * (1.0 - s)


def identity_act(x):
    return np.asarray(x, dtype=float)


def identity_deriv(x):
    return np.ones_like(np.asarray(x, dtype=float))


def identity_second_deriv(x):
    return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Activation:
    """Scalar activation with its derivative envelope constants.

    dot_psi_max / ddot_psi_max are sup |psi'| and sup |psi''| obtained by
    dense-grid maximization; the Lipschitz constant of psi' equals
    ddot_psi_max for these activations.
    """

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    second_deriv: Callable[[np.ndarray], np.ndarray]
    dot_psi_max: float
    ddot_psi_max: float

    @property
    def deriv_lipschitz(self) -> float:
        return self.ddot_psi_max


_ACT_TABLE = {
    "gelu": (gelu, gelu_deriv, gelu_second_deriv),
    "softplus": (softplus_shifted, softplus_deriv, softplus_second_deriv),
    # linear is a diagnostic stand-in (exact quadratic testbeds), not part of
    # the certified activation family
    "linear": (identity_act, identity_deriv, identity_second_deriv),
}


def make_activation(kind: str, grid_halfwidth: float = 10.0, grid_step: float = 1e-4) -> Activation:
    """Build an activation; derivative bounds come from a dense grid on
    [-grid_halfwidth, grid_halfwidth] sampled at grid_step."""
    kind = kind.lower()
    if kind not in _ACT_TABLE:
        raise ValueError(f"unsupported activation kind: {kind!r}")
    fn, d1, d2 = _ACT_TABLE[kind]
    grid = np.arange(-grid_halfwidth, grid_halfwidth + grid_step, grid_step)
    dot_max = float(np.max(np.abs(d1(grid))))
    ddot_max = float(np.max(np.abs(d2(grid))))
    return Activation(kind, fn, d1, d2, dot_max, ddot_max)


@dataclass(frozen=True)
class TwoLayerNet:
    """Immutable two-layer map W2 @ psi(W1 @ x).

    Initialization standard deviations and seed are kept as provenance; they
    feed the closed-form spectral certificates and run summaries.
    """

    W1: np.ndarray  # (d1, d0)
    W2: np.ndarray  # (d2, d1)
    act: Activation
    init_sigma1: float | None = None
    init_sigma2: float | None = None
    init_seed: int | None = None

    def __post_init__(self):
        W1 = np.asarray(self.W1, dtype=float)
        W2 = np.asarray(self.W2, dtype=float)
        if W1.ndim != 2 or W2.ndim != 2:
            raise ValueError("W1 and W2 must be matrices")
        if W2.shape[1] != W1.shape[0]:
            raise ValueError(
                f"layer shapes are inconsistent: W1 {W1.shape}, W2 {W2.shape}"
            )
        if not (np.all(np.isfinite(W1)) and np.all(np.isfinite(W2))):
            raise ValueError("non-finite weight entries")
        object.__setattr__(self, "W1", W1)
        object.__setattr__(self, "W2", W2)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.W1.shape[1], self.W1.shape[0], self.W2.shape[0])

    @property
    def n_params(self) -> int:
        return self.W1.size + self.W2.size

    def to_jsonable(self) -> dict:
        d0, d1, d2 = self.dims
        return {
            "dims": [d0, d1, d2],
            "activation": self.act.kind,
            "init_sigma1": self.init_sigma1,
            "init_sigma2": self.init_sigma2,
            "init_seed": self.init_seed,
            "W1": self.W1.tolist(),
            "W2": self.W2.tolist(),
        }


def init_gaussian(
    dims: tuple[int, int, int],
    sigma1: float,
    sigma2: float,
    seed: int,
    act: Activation | None = None,
) -> TwoLayerNet:
    """Sample W1 ~ N(0, sigma1^2) entrywise and W2 ~ N(0, sigma2^2) entrywise,
    deterministically from the seed."""
    d0, d1, d2 = dims
    if min(d0, d1, d2) <= 0:
        raise ValueError("all dimensions must be positive")
    if sigma1 <= 0 or sigma2 <= 0:
        raise ValueError("initialization standard deviations must be positive")
    if act is None:
        act = make_activation("gelu")
    rng = np.random.default_rng(seed)
    W1 = rng.normal(0.0, sigma1, size=(d1, d0))
    W2 = rng.normal(0.0, sigma2, size=(d2, d1))
    return TwoLayerNet(W1, W2, act, init_sigma1=float(sigma1), init_sigma2=float(sigma2), init_seed=int(seed))


def forward(net: TwoLayerNet, x: np.ndarray) -> np.ndarray:
    """Evaluate W2 @ psi(W1 @ x) for a single input vector."""
    x = np.asarray(x, dtype=float)
    d0, _, _ = net.dims
    if x.shape != (d0,):
        raise ValueError(f"input must have shape ({d0},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    return net.W2 @ net.act.fn(net.W1 @ x)


def jacobian_input(net: TwoLayerNet, x: np.ndarray) -> np.ndarray:
    """d/dx of forward: W2 @ diag(psi'(W1 x)) @ W1, shape (d2, d0)."""
    x = np.asarray(x, dtype=float)
    d0, _, _ = net.dims
    if x.shape != (d0,):
        raise ValueError(f"input must have shape ({d0},), got {x.shape}")
    s = net.act.deriv(net.W1 @ x)
    return net.W2 @ (s[:, None] * net.W1)


def jacobian_params(net: TwoLayerNet, X: np.ndarray) -> np.ndarray:
    """Stacked Jacobian of the outputs on the rows of X with respect to all
    parameters, flattened as (W1 row-major, then W2 row-major).

    Output row i*d2 + k is d F_k(x_i); shape (n*d2, d1*d0 + d2*d1).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    d0, d1, d2 = net.dims
    if X.shape[1] != d0:
        raise ValueError(f"samples must have {d0} columns, got {X.shape[1]}")
    n = X.shape[0]
    row_norms = np.linalg.norm(X, axis=1)
    if np.any(np.abs(row_norms - 1.0) > 1e-8):
        warnings.warn("sample rows are not unit-norm", stacklevel=2)
    Z = X @ net.W1.T                      # (n, d1)
    S = net.act.deriv(Z)                  # (n, d1)
    H = net.act.fn(Z)                     # (n, d1)
    # dF_k(x_i)/dW1[p, q] = W2[k, p] * psi'(z_ip) * x_iq
    block_w1 = np.einsum("kp,ip,iq->ikpq", net.W2, S, X).reshape(n * d2, d1 * d0)
    # dF_k(x_i)/dW2[p, q] = delta_{kp} * psi(z_iq)
    block_w2 = np.zeros((n, d2, d2, d1))
    idx = np.arange(d2)
    block_w2[:, idx, idx, :] = H[:, None, :]
    block_w2 = block_w2.reshape(n * d2, d2 * d1)
    return np.hstack([block_w1, block_w2])


def spectral_bounds_input(
    sigma1: float, sigma2: float, d1: int, theta_norm: float, C: float = 1.0
) -> tuple[float, float]:
    """Closed-form bracket for the extreme singular values of the
    input-Jacobian of a Gaussian-initialized net evaluated at norm ``theta_norm``.

    lower = max(0, s1*s2*d1/16 * (1/2 - s1*|theta|*sqrt(C*d1/pi)))
    upper = 3.47 * s1 * s2 * d1

    A zero lower value means the variance condition margin is exhausted and the
    certificate is vacuous.
    """
    if sigma1 <= 0 or sigma2 <= 0 or d1 <= 0 or theta_norm < 0 or C <= 0:
        raise ValueError("inputs must be positive (theta_norm may be zero)")
    bracket = 0.5 - sigma1 * theta_norm * np.sqrt(C * d1 / np.pi)
    lower = max(0.0, sigma1 * sigma2 * d1 / 16.0 * bracket)
    upper = 3.47 * sigma1 * sigma2 * d1
    return float(lower), float(upper)


def smoothness_input(sigma1: float, sigma2: float, d1: int) -> float:
    """Jacobian Lipschitz constant of a Gaussian-initialized net with respect
    to its input: 343 * s1^2 * s2 * d1^(3/2) / (32 * sqrt(2*pi))."""
    if sigma1 <= 0 or sigma2 <= 0 or d1 <= 0:
        raise ValueError("inputs must be positive")
    return float(343.0 * sigma1**2 * sigma2 * d1**1.5 / (32.0 * _SQRT_2PI))


def smoothness_data(X: np.ndarray, act: Activation, chi_max: float) -> float:
    """Parameter-space smoothness sqrt(2)*sigma_max(X)*(dot_psi_max +
    ddot_psi_max*chi_max); chi_max must dominate sigma_max(W2) along the run."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.size == 0:
        raise ValueError("empty data matrix")
    sig_max = float(np.linalg.svd(X, compute_uv=False)[0])
    return float(np.sqrt(2.0) * sig_max * (act.dot_psi_max + act.ddot_psi_max * chi_max))


def empirical_spectrum(J: np.ndarray) -> tuple[float, float]:
    """Smallest and largest singular values of J via full SVD."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if not np.all(np.isfinite(J)):
        raise ValueError("non-finite matrix entries")
    s = np.linalg.svd(J, compute_uv=False)
    return float(s[-1]), float(s[0])


@dataclass(frozen=True)
class SpectralCertificate:
    """Closed-form singular value bracket paired with the measured spectrum.

    verdict is 'Vacuous' exactly when the clamped lower bound is 0, else
    'Holds' if the measured values sit inside the bracket, else 'Violated'.
    """

    sigma_min_lower: float
    sigma_max_upper: float
    beta: float
    radius: float
    sigma_min_emp: float
    sigma_max_emp: float
    verdict: str

    def to_jsonable(self) -> dict:
        return {
            "sigma_min_lower": self.sigma_min_lower,
            "sigma_max_upper": self.sigma_max_upper,
            "beta": self.beta,
            "radius": self.radius,
            "sigma_min_emp": self.sigma_min_emp,
            "sigma_max_emp": self.sigma_max_emp,
            "verdict": self.verdict,
        }


def certify_input_jacobian(
    net: TwoLayerNet, theta: np.ndarray, C: float = 1.0
) -> SpectralCertificate:
    """Compare the closed-form singular-value bracket against the measured
    input-Jacobian spectrum at theta.

    Requires init provenance (sigma1/sigma2) on the net. The ball radius is
    mu/(2*beta) where mu falls back to 0.9 * measured sigma_min when the
    closed-form lower bound is vacuous.
    """
    if net.init_sigma1 is None or net.init_sigma2 is None:
        raise ValueError("net has no initialization provenance")
    _, d1, _ = net.dims
    theta = np.asarray(theta, dtype=float)
    lower, upper = spectral_bounds_input(
        net.init_sigma1, net.init_sigma2, d1, float(np.linalg.norm(theta)), C
    )
    beta = smoothness_input(net.init_sigma1, net.init_sigma2, d1)
    smin, smax = empirical_spectrum(jacobian_input(net, theta))
    if lower == 0.0:
        verdict = "Vacuous"
        mu = 0.9 * smin
    else:
        verdict = "Holds" if (smin >= lower and smax <= upper) else "Violated"
        mu = lower
    return SpectralCertificate(
        sigma_min_lower=lower,
        sigma_max_upper=upper,
        beta=beta,
        radius=mu / (2.0 * beta),
        sigma_min_emp=smin,
        sigma_max_emp=smax,
        verdict=verdict,
    )
