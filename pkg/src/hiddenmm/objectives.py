"""Latent losses, bilinear couplings, and the two hidden game families.

An input game optimizes the input vectors of two fixed random nets inside a
regularized bilinear latent objective.  A separable game optimizes the nets'
parameters in an ERM objective  sum_i l_F(y_i, F(x_i)) + <F, A G> - sum_j
l_G(y_j, G(x_j)).  Both are convex-concave in the latent outputs only; the
parametrization makes them nonconvex.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit, logsumexp, softmax

from .players import TwoLayerNet, forward, jacobian_input, jacobian_params, make_activation

__all__ = [
    "LatentLoss",
    "HiddenGame",
    "QuadraticTestbed",
    "make_loss",
    "latent_grad",
    "latent_value",
    "growth_bound",
    "label_diameter",
    "game_value",
    "game_grads",
    "latent_grads",
    "best_response_max",
    "best_response_min",
    "nash_gap",
    "make_quadratic_game",
]

LOSS_KINDS = ("mse", "logistic", "squared_hinge", "cross_entropy_l2", "quadratic_to_target")

# gradient growth table: |grad| <= A1*|h| + A2*diam(Y) + A3
_GROWTH = {
    "mse": (1.0, 1.0, 0.0),
    "logistic": (0.0, 0.0, 1.0),
    "squared_hinge": (2.0, 1.0, 0.0),
    "cross_entropy_l2": (None, 0.0, 2.0),  # A1 = reg_lambda
    "quadratic_to_target": (1.0, 1.0, 0.0),
}


@dataclass(frozen=True)
class LatentLoss:
    """A per-sample loss on network outputs, with its convexity metadata.

    mu is the strong-convexity modulus in the output (0 when only convex),
    smooth the gradient Lipschitz constant, growth the (A1, A2, A3) envelope
    constants for |grad| <= A1*|h| + A2*diam(Y) + A3.
    """

    kind: str
    mu: float
    smooth: float
    growth: tuple[float, float, float]
    reg_lambda: float = 0.0
    target: np.ndarray | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.mu > self.smooth + 1e-12:
            raise ValueError("strong convexity modulus cannot exceed smoothness")


def make_loss(
    kind: str,
    reg_lambda: float = 0.0,
    target: np.ndarray | None = None,
    scale: float = 1.0,
) -> LatentLoss:
    """Construct a latent loss with its table constants.

    scale multiplies the quadratic kinds (loss (scale/2)*||h-y||^2), which
    scales mu, smooth and the A1/A2 growth constants accordingly.
    """
    kind = kind.lower()
    if kind not in LOSS_KINDS:
        raise ValueError(f"unknown loss kind {kind!r}")
    if kind == "mse":
        return LatentLoss(kind, mu=scale, smooth=scale, growth=(scale, scale, 0.0), scale=scale)
    if kind == "quadratic_to_target":
        if target is None:
            raise ValueError("quadratic_to_target requires a target vector")
        t = np.asarray(target, dtype=float)
        return LatentLoss(kind, mu=scale, smooth=scale, growth=(scale, scale, 0.0), target=t, scale=scale)
    if kind == "logistic":
        return LatentLoss(kind, mu=0.0, smooth=0.25, growth=(0.0, 0.0, 1.0))
    if kind == "squared_hinge":
        return LatentLoss(kind, mu=0.0, smooth=1.0, growth=(2.0, 1.0, 0.0))
    # cross-entropy + l2: strong convexity comes from the ridge term
    if reg_lambda <= 0:
        raise ValueError("cross_entropy_l2 requires reg_lambda > 0")
    return LatentLoss(
        "cross_entropy_l2",
        mu=reg_lambda,
        smooth=0.5 + reg_lambda,
        growth=(reg_lambda, 0.0, 2.0),
        reg_lambda=reg_lambda,
    )


def _as_scalar_pair(h, y):
    h = np.asarray(h, dtype=float).reshape(-1)
    if h.size != 1:
        raise ValueError("this loss kind is defined for scalar latent outputs")
    return float(h[0]), float(np.asarray(y).reshape(-1)[0])


def latent_value(loss: LatentLoss, h: np.ndarray, y=None) -> float:
    """Loss value at latent output h with label y."""
    if loss.kind == "mse":
        h = np.asarray(h, float)
        y = np.asarray(y, float)
        return float(0.5 * loss.scale * np.sum((h - y) ** 2))
    if loss.kind == "quadratic_to_target":
        h = np.asarray(h, float)
        return float(0.5 * loss.scale * np.sum((h - loss.target) ** 2))
    if loss.kind == "logistic":
        hv, yv = _as_scalar_pair(h, y)
        return float(np.logaddexp(0.0, hv) - yv * hv)
    if loss.kind == "squared_hinge":
        hv, yv = _as_scalar_pair(h, y)
        return float(0.5 * max(0.0, 1.0 - yv * hv) ** 2)
    # cross_entropy_l2, y on the probability simplex
    h = np.asarray(h, float)
    y = np.asarray(y, float)
    return float(logsumexp(h) - y @ h + 0.5 * loss.reg_lambda * h @ h)


def latent_grad(loss: LatentLoss, h: np.ndarray, y=None) -> np.ndarray:
    """Gradient of the loss with respect to the latent output h."""
    if loss.kind == "mse":
        return loss.scale * (np.asarray(h, float) - np.asarray(y, float))
    if loss.kind == "quadratic_to_target":
        # raw gradient; any outer regularization weight is applied by the game
        return loss.scale * (np.asarray(h, float) - loss.target)
    if loss.kind == "logistic":
        hv, yv = _as_scalar_pair(h, y)
        return np.array([expit(hv) - yv])
    if loss.kind == "squared_hinge":
        hv, yv = _as_scalar_pair(h, y)
        margin = 1.0 - yv * hv
        return np.array([-yv * margin if margin > 0 else 0.0])
    h = np.asarray(h, float)
    return softmax(h) - np.asarray(y, float) + loss.reg_lambda * h


def growth_bound(loss: LatentLoss, h_norm: float, diam_y: float) -> float:
    """Envelope A1*|h| + A2*diam(Y) + A3 for the latent gradient norm."""
    if h_norm < 0 or diam_y < 0:
        raise ValueError("norms must be nonnegative")
    a1, a2, a3 = loss.growth
    if a1 is None:
        a1 = loss.reg_lambda
    return float(a1 * h_norm + a2 * diam_y + a3)


def label_diameter(Y: np.ndarray) -> float:
    """Largest pairwise distance among the label rows."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] > 2048:
        center = Y.mean(axis=0)
        return float(2.0 * np.max(np.linalg.norm(Y - center, axis=1)))
    diffs = Y[:, None, :] - Y[None, :, :]
    return float(np.sqrt((diffs**2).sum(-1)).max())


@dataclass(frozen=True)
class QuadraticTestbed:
    """Exactly strongly-convex-strongly-concave instance
    L = (mu_theta/2)|theta-a|^2 + theta' B phi - (mu_phi/2)|phi-b|^2
    with every derived quantity in closed form."""

    mu_theta: float
    mu_phi: float
    B: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def value(self, theta, phi) -> float:
        theta = np.asarray(theta, float)
        phi = np.asarray(phi, float)
        return float(
            0.5 * self.mu_theta * np.sum((theta - self.a) ** 2)
            + theta @ self.B @ phi
            - 0.5 * self.mu_phi * np.sum((phi - self.b) ** 2)
        )

    def grads(self, theta, phi):
        theta = np.asarray(theta, float)
        phi = np.asarray(phi, float)
        gt = self.mu_theta * (theta - self.a) + self.B @ phi
        gp = self.B.T @ theta - self.mu_phi * (phi - self.b)
        return gt, gp

    def best_response_max(self, theta) -> np.ndarray:
        return self.b + self.B.T @ np.asarray(theta, float) / self.mu_phi

    def best_response_min(self, phi) -> np.ndarray:
        return self.a - self.B @ np.asarray(phi, float) / self.mu_theta

    def saddle(self) -> tuple[np.ndarray, np.ndarray]:
        # eliminate phi from the stationarity system; the reduced matrix is SPD
        M = self.mu_theta * np.eye(len(self.a)) + self.B @ self.B.T / self.mu_phi
        theta = np.linalg.solve(M, self.mu_theta * self.a - self.B @ self.b)
        return theta, self.best_response_max(theta)

    def saddle_value(self) -> float:
        return self.value(*self.saddle())

    def max_marginal(self, theta) -> float:
        """max over phi of L(theta, phi)."""
        return self.value(theta, self.best_response_max(theta))

    def min_marginal(self, phi) -> float:
        """min over theta of L(theta, phi)."""
        return self.value(self.best_response_min(phi), phi)

    def nash_gap(self, theta, phi) -> float:
        return self.max_marginal(theta) - self.min_marginal(phi)

    def potential(self, theta, phi, lambda_pot: float) -> float:
        m = self.max_marginal(theta)
        return (m - self.saddle_value()) + lambda_pot * (m - self.value(theta, phi))

    def grad_smoothness(self) -> float:
        """Lipschitz constant of the joint gradient field."""
        dt, dp = self.B.shape
        M = np.block(
            [
                [self.mu_theta * np.eye(dt), self.B],
                [self.B.T, -self.mu_phi * np.eye(dp)],
            ]
        )
        return float(np.linalg.svd(M, compute_uv=False)[0])


@dataclass(frozen=True)
class HiddenGame:
    """Full description of a hidden min-max game between two neural players.

    family 'input': decision variables are the nets' input vectors; objective
        F(th)' A G(ph) + (eps_min/2)|F(th)-c_min|^2 - (eps_max/2)|G(ph)-c_max|^2
        where the centers default to the origin (set uniform_target for the
        centered variant).
    family 'separable': decision variables are the flattened net parameters;
        objective sum_i l_min(y_i, F(x_i)) + <F, A G> - sum_j l_max(y_j, G(x_j))
        over the attached datasets.  The coupling may be the shared per-pair
        matrix (d2F x d2G) or the full stacked block matrix.
    """

    minp: TwoLayerNet
    maxp: TwoLayerNet
    coupling: np.ndarray
    eps: float = 0.0
    family: str = "input"
    datasets: tuple | None = None  # (X_F, Y_F, X_G, Y_G)
    loss_min: LatentLoss | None = None
    loss_max: LatentLoss | None = None
    uniform_target: np.ndarray | None = None
    eps_min: float | None = None
    eps_max: float | None = None
    center_min: np.ndarray | None = None
    center_max: np.ndarray | None = None
    l_grad_hint: float | None = None
    quadratic: QuadraticTestbed | None = None
    coupling_norm: float = field(init=False, default=0.0)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.coupling, dtype=float))
        object.__setattr__(self, "coupling", A)
        if not np.all(np.isfinite(A)):
            raise ValueError("coupling matrix has non-finite entries")
        object.__setattr__(
            self, "coupling_norm", float(np.linalg.svd(A, compute_uv=False)[0]) if A.size else 0.0
        )
        if self.family not in ("input", "separable"):
            raise ValueError(f"unknown game family {self.family!r}")
        if self.eps_min is None:
            object.__setattr__(self, "eps_min", float(self.eps))
        if self.eps_max is None:
            object.__setattr__(self, "eps_max", float(self.eps))
        if self.uniform_target is not None:
            u = np.asarray(self.uniform_target, dtype=float)
            object.__setattr__(self, "uniform_target", u)
            if self.center_min is None:
                object.__setattr__(self, "center_min", u)
            if self.center_max is None:
                object.__setattr__(self, "center_max", u)
        if self.family == "input":
            if self.eps_min <= 0 or self.eps_max <= 0:
                raise ValueError("input games require a positive regularization weight")
            d2F, d2G = self.minp.dims[2], self.maxp.dims[2]
            if A.shape != (d2F, d2G):
                raise ValueError(f"coupling must be ({d2F}, {d2G}), got {A.shape}")
        else:
            if self.datasets is None:
                raise ValueError("separable games require datasets (X_F, Y_F, X_G, Y_G)")
            if self.loss_min is None or self.loss_max is None:
                raise ValueError("separable games require both latent losses")
            if self.loss_min.mu <= 0 or self.loss_max.mu <= 0:
                raise ValueError("separable games require strongly convex latent losses")
            X_F, _, X_G, _ = self.datasets
            n, m = X_F.shape[0], X_G.shape[0]
            d2F, d2G = self.minp.dims[2], self.maxp.dims[2]
            if A.shape not in ((d2F, d2G), (n * d2F, m * d2G)):
                raise ValueError(
                    f"coupling must be shared ({d2F},{d2G}) or stacked ({n*d2F},{m*d2G}), got {A.shape}"
                )

    # -- dimensions -------------------------------------------------------
    @property
    def theta_dim(self) -> int:
        return self.minp.dims[0] if self.family == "input" else self.minp.n_params

    @property
    def phi_dim(self) -> int:
        return self.maxp.dims[0] if self.family == "input" else self.maxp.n_params

    def latent_dims(self) -> tuple[int, int]:
        if self.family == "input":
            return self.minp.dims[2], self.maxp.dims[2]
        X_F, _, X_G, _ = self.datasets
        return X_F.shape[0] * self.minp.dims[2], X_G.shape[0] * self.maxp.dims[2]

    # -- evaluation helpers ------------------------------------------------
    def latent_outputs(self, theta, phi) -> tuple[np.ndarray, np.ndarray]:
        """Current latent outputs, stacked flat for separable games."""
        if self.family == "input":
            return forward(self.minp, theta), forward(self.maxp, phi)
        F = _net_outputs(self.minp, theta, self.datasets[0])
        G = _net_outputs(self.maxp, phi, self.datasets[2])
        return F.ravel(), G.ravel()

    def jacobians(self, theta, phi) -> tuple[np.ndarray, np.ndarray]:
        """Jacobians of both latent maps at the current iterates."""
        if self.family == "input":
            return jacobian_input(self.minp, theta), jacobian_input(self.maxp, phi)
        JF = jacobian_params(_with_params(self.minp, theta), self.datasets[0])
        JG = jacobian_params(_with_params(self.maxp, phi), self.datasets[2])
        return JF, JG


# -- separable-game parameter handling -------------------------------------

def split_params(net: TwoLayerNet, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unflatten a parameter vector into (W1, W2), row-major each."""
    d0, d1, d2 = net.dims
    w = np.asarray(w, dtype=float)
    if w.shape != (d1 * d0 + d2 * d1,):
        raise ValueError(f"expected {d1*d0 + d2*d1} parameters, got shape {w.shape}")
    return w[: d1 * d0].reshape(d1, d0), w[d1 * d0 :].reshape(d2, d1)


def flat_params(net: TwoLayerNet) -> np.ndarray:
    return np.concatenate([net.W1.ravel(), net.W2.ravel()])


def _with_params(net: TwoLayerNet, w: np.ndarray) -> TwoLayerNet:
    W1, W2 = split_params(net, w)
    return TwoLayerNet(W1, W2, net.act, net.init_sigma1, net.init_sigma2, net.init_seed)


def _net_outputs(net: TwoLayerNet, w: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Outputs (n, d2) of the net with parameter vector w on the rows of X."""
    W1, W2 = split_params(net, w)
    return net.act.fn(X @ W1.T) @ W2.T


# -- coupling forms ----------------------------------------------------------

def _couple_value(A: np.ndarray, F: np.ndarray, G: np.ndarray) -> float:
    if A.shape == (F.shape[1], G.shape[1]) and A.shape != (F.size, G.size):
        return float(F.sum(axis=0) @ A @ G.sum(axis=0))
    return float(F.ravel() @ A @ G.ravel())


def _couple_grad_f(A: np.ndarray, F: np.ndarray, G: np.ndarray) -> np.ndarray:
    if A.shape == (F.shape[1], G.shape[1]) and A.shape != (F.size, G.size):
        return np.tile(A @ G.sum(axis=0), (F.shape[0], 1))
    return (A @ G.ravel()).reshape(F.shape)


def _couple_grad_g(A: np.ndarray, F: np.ndarray, G: np.ndarray) -> np.ndarray:
    if A.shape == (F.shape[1], G.shape[1]) and A.shape != (F.size, G.size):
        return np.tile(A.T @ F.sum(axis=0), (G.shape[0], 1))
    return (A.T @ F.ravel()).reshape(G.shape)


# -- objective value and gradients -------------------------------------------

def game_value(game: HiddenGame, theta: np.ndarray, phi: np.ndarray) -> float:
    """Scalar objective at (theta, phi)."""
    if game.family == "input":
        f = forward(game.minp, theta)
        g = forward(game.maxp, phi)
        cf = 0.0 if game.center_min is None else game.center_min
        cg = 0.0 if game.center_max is None else game.center_max
        return float(
            f @ game.coupling @ g
            + 0.5 * game.eps_min * np.sum((f - cf) ** 2)
            - 0.5 * game.eps_max * np.sum((g - cg) ** 2)
        )
    X_F, Y_F, X_G, Y_G = game.datasets
    F = _net_outputs(game.minp, theta, X_F)
    G = _net_outputs(game.maxp, phi, X_G)
    v = _couple_value(game.coupling, F, G)
    v += sum(latent_value(game.loss_min, F[i], Y_F[i]) for i in range(F.shape[0]))
    v -= sum(latent_value(game.loss_max, G[j], Y_G[j]) for j in range(G.shape[0]))
    return float(v)


def latent_grads(game: HiddenGame, theta: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the objective with respect to the latent outputs
    (stacked flat for separable games)."""
    if game.family == "input":
        f = forward(game.minp, theta)
        g = forward(game.maxp, phi)
        cf = 0.0 if game.center_min is None else game.center_min
        cg = 0.0 if game.center_max is None else game.center_max
        vf = game.coupling @ g + game.eps_min * (f - cf)
        vg = game.coupling.T @ f - game.eps_max * (g - cg)
        return vf, vg
    X_F, Y_F, X_G, Y_G = game.datasets
    F = _net_outputs(game.minp, theta, X_F)
    G = _net_outputs(game.maxp, phi, X_G)
    VF = _couple_grad_f(game.coupling, F, G)
    VG = _couple_grad_g(game.coupling, F, G)
    for i in range(F.shape[0]):
        VF[i] += latent_grad(game.loss_min, F[i], Y_F[i])
    for j in range(G.shape[0]):
        VG[j] -= latent_grad(game.loss_max, G[j], Y_G[j])
    return VF.ravel(), VG.ravel()


def _input_grad(net: TwoLayerNet, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """J(x)^T v without materializing the Jacobian."""
    z = net.W1 @ x
    return net.W1.T @ (net.act.deriv(z) * (net.W2.T @ v))


def _param_grad(net: TwoLayerNet, w: np.ndarray, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Stacked parameter-Jacobian transpose applied to V (n, d2)."""
    W1, W2 = split_params(net, w)
    Z = X @ W1.T
    S = net.act.deriv(Z)
    H = net.act.fn(Z)
    T = S * (V @ W2)                        # (n, d1)
    grad_W1 = T.T @ X                       # (d1, d0)
    grad_W2 = V.T @ H                       # (d2, d1)
    return np.concatenate([grad_W1.ravel(), grad_W2.ravel()])


def game_grads(game: HiddenGame, theta: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact analytic gradients of the objective in (theta, phi)."""
    if game.family == "input":
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        f = forward(game.minp, theta)
        g = forward(game.maxp, phi)
        cf = 0.0 if game.center_min is None else game.center_min
        cg = 0.0 if game.center_max is None else game.center_max
        vf = game.coupling @ g + game.eps_min * (f - cf)
        vg = game.coupling.T @ f - game.eps_max * (g - cg)
        return _input_grad(game.minp, theta, vf), _input_grad(game.maxp, phi, vg)
    X_F, Y_F, X_G, Y_G = game.datasets
    vf_flat, vg_flat = latent_grads(game, theta, phi)
    VF = vf_flat.reshape(X_F.shape[0], game.minp.dims[2])
    VG = vg_flat.reshape(X_G.shape[0], game.maxp.dims[2])
    return (
        _param_grad(game.minp, theta, X_F, VF),
        _param_grad(game.maxp, phi, X_G, VG),
    )


# -- inner solvers -----------------------------------------------------------

def _estimate_grad_lipschitz(grad_fn, z0: np.ndarray, probes: int = 4, radius: float = 1e-4) -> float:
    """Local Lipschitz estimate of a gradient field by symmetric probing."""
    rng = np.random.default_rng(0)
    g0 = grad_fn(z0)
    best = 1e-12
    for _ in range(probes):
        d = rng.normal(size=z0.shape)
        d *= radius / np.linalg.norm(d)
        best = max(best, np.linalg.norm(grad_fn(z0 + d) - g0) / radius)
    return 3.0 * best


def _ascend(value_fn, grad_fn, z0, tol, max_iter, step):
    """Fixed-step gradient ascent with a divergence guard that halves the step
    whenever the objective drops between checkpoints."""
    z = np.asarray(z0, dtype=float).copy()
    best_z, best_v = z.copy(), value_fn(z)
    last_check = best_v
    for it in range(max_iter):
        g = grad_fn(z)
        if np.linalg.norm(g) <= tol:
            return z, it, True
        z = z + step * g
        if (it + 1) % 50 == 0:
            v = value_fn(z)
            if v > best_v:
                best_z, best_v = z.copy(), v
            if v < last_check - 1e-15:
                step *= 0.5
                z = best_z.copy()
            last_check = v
    return z, max_iter, np.linalg.norm(grad_fn(z)) <= tol


def best_response_max(
    game: HiddenGame,
    theta: np.ndarray,
    phi0: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 200_000,
    l_grad: float | None = None,
) -> tuple[np.ndarray, float]:
    """Approximate argmax over phi of the objective at fixed theta, warm
    started at phi0; stops when the phi-gradient norm drops below tol.

    Quadratic testbeds are solved in closed form instead of iterated.
    """
    if game.quadratic is not None:
        phi = game.quadratic.best_response_max(theta)
        return phi, game.quadratic.value(theta, phi)

    if game.family == "input":
        f = forward(game.minp, np.asarray(theta, dtype=float))
        cg = 0.0 if game.center_max is None else game.center_max
        af = game.coupling.T @ f
        fpart = 0.5 * game.eps_min * np.sum(
            (f - (0.0 if game.center_min is None else game.center_min)) ** 2
        )

        def value_fn(phi):
            g = forward(game.maxp, phi)
            return float(af @ g - 0.5 * game.eps_max * np.sum((g - cg) ** 2) + fpart)

        def grad_fn(phi):
            g = forward(game.maxp, phi)
            return _input_grad(game.maxp, phi, af - game.eps_max * (g - cg))

    else:
        X_F, Y_F, X_G, Y_G = game.datasets
        F = _net_outputs(game.minp, theta, X_F)

        def value_fn(phi):
            G = _net_outputs(game.maxp, phi, X_G)
            v = _couple_value(game.coupling, F, G)
            v -= sum(latent_value(game.loss_max, G[j], Y_G[j]) for j in range(G.shape[0]))
            return float(v)

        def grad_fn(phi):
            G = _net_outputs(game.maxp, phi, X_G)
            VG = _couple_grad_g(game.coupling, F, G)
            for j in range(G.shape[0]):
                VG[j] -= latent_grad(game.loss_max, G[j], Y_G[j])
            return _param_grad(game.maxp, phi, X_G, VG)

    L = l_grad or game.l_grad_hint or _estimate_grad_lipschitz(grad_fn, np.asarray(phi0, float))
    phi, iters, converged = _ascend(value_fn, grad_fn, phi0, tol, max_iter, 1.0 / L)
    if not converged:
        warnings.warn(
            f"inner maximization stopped after {iters} iterations above tolerance {tol:g}",
            stacklevel=2,
        )
    return phi, value_fn(phi)


def best_response_min(
    game: HiddenGame,
    phi: np.ndarray,
    theta0: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 200_000,
    l_grad: float | None = None,
) -> tuple[np.ndarray, float]:
    """Descent mirror of best_response_max: argmin over theta at fixed phi."""
    if game.quadratic is not None:
        theta = game.quadratic.best_response_min(phi)
        return theta, game.quadratic.value(theta, phi)

    if game.family == "input":
        g = forward(game.maxp, np.asarray(phi, dtype=float))
        cf = 0.0 if game.center_min is None else game.center_min
        ag = game.coupling @ g
        gpart = -0.5 * game.eps_max * np.sum(
            (g - (0.0 if game.center_max is None else game.center_max)) ** 2
        )

        def value_fn(theta):
            f = forward(game.minp, theta)
            return float(f @ ag + 0.5 * game.eps_min * np.sum((f - cf) ** 2) + gpart)

        def grad_fn(theta):
            f = forward(game.minp, theta)
            return _input_grad(game.minp, theta, ag + game.eps_min * (f - cf))

    else:
        X_F, Y_F, X_G, Y_G = game.datasets
        G = _net_outputs(game.maxp, phi, X_G)

        def value_fn(theta):
            F = _net_outputs(game.minp, theta, X_F)
            v = _couple_value(game.coupling, F, G)
            v += sum(latent_value(game.loss_min, F[i], Y_F[i]) for i in range(F.shape[0]))
            return float(v)

        def grad_fn(theta):
            F = _net_outputs(game.minp, theta, X_F)
            VF = _couple_grad_f(game.coupling, F, G)
            for i in range(F.shape[0]):
                VF[i] += latent_grad(game.loss_min, F[i], Y_F[i])
            return _param_grad(game.minp, theta, X_F, VF)

    L = l_grad or game.l_grad_hint or _estimate_grad_lipschitz(grad_fn, np.asarray(theta0, float))
    theta, iters, converged = _ascend(
        lambda z: -value_fn(z), lambda z: -grad_fn(z), theta0, tol, max_iter, 1.0 / L
    )
    if not converged:
        warnings.warn(
            f"inner minimization stopped after {iters} iterations above tolerance {tol:g}",
            stacklevel=2,
        )
    return theta, value_fn(theta)


def nash_gap(
    game: HiddenGame,
    theta: np.ndarray,
    phi: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 200_000,
) -> float:
    """Duality gap max_phi' L(theta, phi') - min_theta' L(theta', phi);
    zero exactly at a saddle, computed here up to the inner tolerance."""
    if game.quadratic is not None:
        return game.quadratic.nash_gap(theta, phi)
    _, up = best_response_max(game, theta, phi, tol=tol, max_iter=max_iter)
    _, down = best_response_min(game, phi, theta, tol=tol, max_iter=max_iter)
    return float(up - down)


def make_quadratic_game(
    mu_theta: float,
    mu_phi: float,
    B: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
) -> HiddenGame:
    """Wrap a quadratic testbed as an input game whose hidden maps are exact
    identities (linear activation, identity weights)."""
    if mu_theta <= 0 or mu_phi <= 0:
        raise ValueError("strong convexity moduli must be positive")
    B = np.atleast_2d(np.asarray(B, dtype=float))
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if B.shape != (a.size, b.size):
        raise ValueError(f"B must be ({a.size}, {b.size}), got {B.shape}")
    lin = make_activation("linear")
    idn = lambda d: TwoLayerNet(np.eye(d), np.eye(d), lin)
    testbed = QuadraticTestbed(float(mu_theta), float(mu_phi), B, a, b)
    return HiddenGame(
        minp=idn(a.size),
        maxp=idn(b.size),
        coupling=B,
        family="input",
        eps_min=float(mu_theta),
        eps_max=float(mu_phi),
        center_min=a,
        center_max=b,
        l_grad_hint=testbed.grad_smoothness(),
        quadratic=testbed,
    )
