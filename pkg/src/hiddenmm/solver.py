"""Alternating gradient descent-ascent with per-iteration audits.

The min player steps first; the max player then steps using the gradient at
the freshly updated min iterate.  Along the run we record gradient norms,
Jacobian spectra, distance from initialization, cumulative path length, and
(when a saddle value is available) the Lyapunov potential
P = (max_phi L - L*) + lambda * (max_phi L - L).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .objectives import (
    HiddenGame,
    best_response_max,
    game_grads,
    game_value,
    latent_grads,
)
from .players import empirical_spectrum

__all__ = [
    "SolverConfig",
    "AuditRow",
    "TrajectoryRecord",
    "TheoryConstants",
    "InitDiagnostics",
    "altgda_step",
    "recommended_rates",
    "potential",
    "theory_constants",
    "p0_upper",
    "measure_init_diagnostics",
    "run",
]


@dataclass(frozen=True)
class SolverConfig:
    """Step sizes, audit cadence and stopping/monitor policy for one run."""

    eta_theta: float
    eta_phi: float
    horizon: int
    lambda_pot: float = 0.1
    inner_tol: float = 1e-8
    audit_every: int = 100
    seed: int = 0
    sigma_min_floor: float = 0.0
    stop_grad_tol: float = 0.0
    radius: float | None = None          # certified ball; None disables the check
    monitor_policy: str = "warn"         # 'warn' records violations, 'abort' stops
    saddle_value: float | None = None    # enables potential audits when known

    def __post_init__(self):
        if self.eta_theta < 0 or self.eta_phi < 0:
            raise ValueError("step sizes must be nonnegative")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.audit_every < 1:
            raise ValueError("audit_every must be at least 1")
        if self.monitor_policy not in ("warn", "abort"):
            raise ValueError("monitor_policy must be 'warn' or 'abort'")

    def to_jsonable(self) -> dict:
        return {
            "eta_theta": self.eta_theta,
            "eta_phi": self.eta_phi,
            "horizon": self.horizon,
            "lambda_pot": self.lambda_pot,
            "inner_tol": self.inner_tol,
            "audit_every": self.audit_every,
            "seed": self.seed,
            "sigma_min_floor": self.sigma_min_floor,
            "stop_grad_tol": self.stop_grad_tol,
            "radius": self.radius,
            "monitor_policy": self.monitor_policy,
            "saddle_value": self.saddle_value,
        }


@dataclass
class AuditRow:
    t: int
    value: float
    grad_norm_theta: float
    grad_norm_phi: float
    sigma_min_F: float
    sigma_min_G: float
    dist_from_init: float
    path_length: float
    potential: float | None
    latent_min: np.ndarray
    latent_max: np.ndarray
    step_displacement: float | None = None  # |dtheta| + |dphi| of the step taken at t


@dataclass
class TrajectoryRecord:
    """Append-only audit log of one AltGDA run."""

    rows: list[AuditRow] = field(default_factory=list)
    stopped_at: int = 0
    stop_reason: str = "horizon"
    violations: list[str] = field(default_factory=list)
    final_theta: np.ndarray | None = None
    final_phi: np.ndarray | None = None
    estimated_potential: float | None = None  # post-hoc estimate when saddle unknown

    @property
    def final_path_length(self) -> float:
        return self.rows[-1].path_length if self.rows else 0.0


@dataclass(frozen=True)
class TheoryConstants:
    """Contraction and path-length constants attached to a run.

    L_big = L + L^2/mu_phi with L the gradient smoothness; alpha1 the
    displacement coefficient; c the per-step potential contraction factor;
    path_bound = 2*sqrt(2*alpha1)/(1-c)*sqrt(P0).
    """

    L_grad: float
    L_big: float
    alpha1: float
    c: float
    path_bound: float
    p0_bound: float | None = None
    L_act: float | None = None
    radius: float | None = None

    @property
    def contractive(self) -> bool:
        return 0.0 < self.c < 1.0

    def to_jsonable(self) -> dict:
        return {
            "L_grad": self.L_grad,
            "L_big": self.L_big,
            "alpha1": self.alpha1,
            "c": self.c,
            "contractive": self.contractive,
            "path_bound": self.path_bound,
            "p0_bound": self.p0_bound,
            "L_act": self.L_act,
            "radius": self.radius,
        }


@dataclass(frozen=True)
class InitDiagnostics:
    """Quantities measured at (theta0, phi0) that enter the step-size and
    initial-potential formulas."""

    grad_norm_theta: float
    grad_norm_phi: float
    latent_grad_norm_F: float
    latent_grad_norm_G: float
    nu_jac_F: float
    nu_jac_G: float
    mu_jac_F: float
    mu_jac_G: float
    beta_F: float
    beta_G: float
    mu_theta: float
    mu_phi: float
    lambda_pot: float = 0.1

    def to_jsonable(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def measure_init_diagnostics(
    game: HiddenGame,
    theta0: np.ndarray,
    phi0: np.ndarray,
    beta_F: float,
    beta_G: float,
    mu_theta: float,
    mu_phi: float,
    lambda_pot: float = 0.1,
) -> InitDiagnostics:
    """Evaluate gradient norms and Jacobian spectra at the initialization;
    smoothness constants and latent moduli are supplied by the caller."""
    gt, gp = game_grads(game, theta0, phi0)
    vf, vg = latent_grads(game, theta0, phi0)
    JF, JG = game.jacobians(theta0, phi0)
    mnF, mxF = empirical_spectrum(JF)
    mnG, mxG = empirical_spectrum(JG)
    return InitDiagnostics(
        grad_norm_theta=float(np.linalg.norm(gt)),
        grad_norm_phi=float(np.linalg.norm(gp)),
        latent_grad_norm_F=float(np.linalg.norm(vf)),
        latent_grad_norm_G=float(np.linalg.norm(vg)),
        nu_jac_F=mxF,
        nu_jac_G=mxG,
        mu_jac_F=mnF,
        mu_jac_G=mnG,
        beta_F=beta_F,
        beta_G=beta_G,
        mu_theta=mu_theta,
        mu_phi=mu_phi,
        lambda_pot=lambda_pot,
    )


def altgda_step(
    game: HiddenGame,
    theta: np.ndarray,
    phi: np.ndarray,
    eta_theta: float,
    eta_phi: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One alternating update: theta descends on the gradient at (theta, phi),
    then phi ascends on the gradient recomputed at (theta_new, phi)."""
    gt, _ = game_grads(game, theta, phi)
    if not np.all(np.isfinite(gt)):
        raise FloatingPointError("non-finite min-player gradient")
    theta_new = theta - eta_theta * gt
    _, gp = game_grads(game, theta_new, phi)
    if not np.all(np.isfinite(gp)):
        raise FloatingPointError("non-finite max-player gradient")
    return theta_new, phi + eta_phi * gp


def _ab_products(diag: InitDiagnostics, L: float) -> tuple[float, float]:
    """The two factor products controlling how far the min step size must be
    damped so the path stays in the certified ball.  Every factor is of the
    form (1 + x) with x >= 0, so both products are at least 1."""
    mt, mf = diag.mu_theta, diag.mu_phi
    jF, jG = diag.mu_jac_F, diag.mu_jac_G
    a = 1.0
    for x in (
        diag.latent_grad_norm_F,
        8.0 * L**4 * diag.nu_jac_F,
        1.0 / (mt**3 * jF**6),
        diag.grad_norm_theta,
        80.0 * L**2 * diag.nu_jac_F,
        1.0 / (mt**3 * jF**4),
        8.0 * L**4 * diag.beta_F,
        1.0 / (2.0 * mt**5 * jF**10),
        80.0 * L**2 * diag.beta_F,
        1.0 / (2.0 * mt**4 * jF**8),
        1.0 / (mt**2 * jF**4),
        1.0 / (2.0 * mt**3 * jF**6),
    ):
        a *= 1.0 + x
    b = 1.0
    for x in (
        diag.latent_grad_norm_G,
        1.0 / (mf**3 * jG**6),
        1.0 / (mf * jG**4),
        1.0 / (mf**2 * jG**4),
        1.0 / (mf * jG**2),
        diag.lambda_pot,
        diag.grad_norm_phi,
        80.0 * L**2 * diag.nu_jac_G,
        8.0 * L**4 * diag.beta_G,
        1.0 / (mf**4 * jG**8),
        80.0 * L**2 * diag.beta_G,
        1.0 / (mf**3 * jG**8),
    ):
        b *= 1.0 + x
    return a, b


def recommended_rates(
    mu_theta: float,
    mu_phi: float,
    L_grad: float,
    init_diag: InitDiagnostics | None = None,
    smoothness_power: int = 3,
) -> tuple[float, float, float, float]:
    """Step sizes (eta_theta, eta_phi) plus the damping pair (c_theta, c_phi).

    eta_phi = 1/L.  eta_theta = c_theta * mu_phi^2 / (18 L^p) where
    c_theta = min(1/2, sqrt(1/(4*A*B))) from the initialization products; the
    smoothness power p defaults to the conservative cubic form (p=2 is the
    simplified variant).  Without diagnostics, or when the products overflow,
    c_theta falls back to 1 and the cubic denominator is used.
    """
    if mu_theta <= 0 or mu_phi <= 0 or L_grad <= 0:
        raise ValueError("moduli and smoothness must be positive")
    if smoothness_power not in (2, 3):
        raise ValueError("smoothness_power must be 2 or 3")
    eta_phi = 1.0 / L_grad
    fallback = mu_phi**2 / (18.0 * L_grad**3)
    if init_diag is None:
        return fallback, eta_phi, 1.0, 1.0
    a, b = _ab_products(init_diag, L_grad)
    prod = 4.0 * a * b
    if not np.isfinite(prod) or prod <= 0:
        warnings.warn("ball-containment products overflowed; using fallback step size", stacklevel=2)
        return fallback, eta_phi, 1.0, 1.0
    c_theta = min(0.5, float(np.sqrt(1.0 / prod)))
    eta_theta = c_theta * mu_phi**2 / (18.0 * L_grad**smoothness_power)
    return eta_theta, eta_phi, c_theta, 1.0


def potential(
    game: HiddenGame,
    theta: np.ndarray,
    phi: np.ndarray,
    lambda_pot: float,
    saddle_value: float,
    inner_tol: float = 1e-8,
) -> float:
    """Lyapunov potential (max_phi L - L*) + lambda*(max_phi L - L(theta, phi)).

    The inner max is the closed-form solve on quadratic testbeds and a
    warm-started gradient ascent otherwise; the result can only undershoot by
    (1 + lambda) * inner_tol.
    """
    if game.quadratic is not None:
        return game.quadratic.potential(theta, phi, lambda_pot)
    _, m = best_response_max(game, theta, phi, tol=inner_tol)
    return float((m - saddle_value) + lambda_pot * (m - game_value(game, theta, phi)))


def theory_constants(
    mu_theta: float,
    mu_phi: float,
    L_grad: float,
    eta_theta: float,
    eta_phi: float,
    P0: float,
    L_act: float | None = None,
    radius: float | None = None,
    p0_bound: float | None = None,
) -> TheoryConstants:
    """Evaluate the contraction factor, displacement coefficient, and the
    resulting path-length bound for the given rates and initial potential."""
    if min(mu_theta, mu_phi, L_grad) <= 0:
        raise ValueError("moduli and smoothness must be positive")
    if P0 < 0:
        raise ValueError("initial potential must be nonnegative")
    L_big = L_grad + L_grad**2 / mu_phi
    boost = 1.0 + eta_phi**2 * L_grad**2
    alpha1 = (
        2.0 * boost * eta_theta**2 * L_big**2 / mu_theta
        + (20.0 * boost * eta_theta**2 * L_grad**2 + 20.0 * L_grad**2 * eta_phi**2) / mu_phi
    )
    c = 1.0 - mu_theta * mu_phi**2 / (36.0 * L_grad**3)
    if 0.0 < c < 1.0:
        path_bound = 2.0 * np.sqrt(2.0 * alpha1) / (1.0 - c) * np.sqrt(P0)
    else:
        warnings.warn(f"no contraction certificate (c = {c:.6g})", stacklevel=2)
        path_bound = float("inf")
    return TheoryConstants(
        L_grad=float(L_grad),
        L_big=float(L_big),
        alpha1=float(alpha1),
        c=float(c),
        path_bound=float(path_bound),
        p0_bound=p0_bound,
        L_act=L_act,
        radius=radius,
    )


def p0_upper(diag: InitDiagnostics) -> tuple[float, float]:
    """Upper bounds for the initial potential from the init diagnostics.

    Returns (refined, simplified): the refined bound is the four-term sum in
    the gradient norms with the (1 + lambda) weight on the max-player terms;
    the simplified form is L*(C1*|g_theta| + C2*|g_phi|) with C1 =
    sqrt(2/mu_theta^3) and C2 = sqrt(2/mu_phi^3)*(1+lambda)*L, L standing in
    for the latent Lipschitz scale (taken as the latent gradient norm bound
    nu * |grad|, so we report the refined form as primary).
    """
    if diag.mu_theta <= 0 or diag.mu_phi <= 0:
        raise ValueError("latent strong convexity moduli must be positive")
    if diag.mu_jac_F <= 0 or diag.mu_jac_G <= 0:
        raise ValueError("Jacobian lower bounds must be positive")
    lam = diag.lambda_pot
    t1 = (
        diag.latent_grad_norm_F
        * diag.nu_jac_F
        / (diag.mu_theta * diag.mu_jac_F**2)
        * diag.grad_norm_theta
    )
    t2 = (
        diag.latent_grad_norm_F
        * diag.beta_F
        / (2.0 * diag.mu_theta**2 * diag.mu_jac_F**4)
        * diag.grad_norm_theta**2
    )
    t3 = (
        (1.0 + lam)
        * diag.latent_grad_norm_G
        * diag.nu_jac_G
        / (diag.mu_phi * diag.mu_jac_G**2)
        * diag.grad_norm_phi
    )
    t4 = (
        (1.0 + lam)
        * diag.latent_grad_norm_G
        * diag.beta_G
        / (2.0 * diag.mu_phi**2 * diag.mu_jac_G**4)
        * diag.grad_norm_phi**2
    )
    refined = t1 + t2 + t3 + t4
    L_lip = max(diag.latent_grad_norm_F, diag.latent_grad_norm_G)
    c1 = np.sqrt(2.0 / diag.mu_theta**3)
    c2 = np.sqrt(2.0 / diag.mu_phi**3) * (1.0 + lam) * L_lip
    simplified = L_lip * (c1 * diag.grad_norm_theta + c2 * diag.grad_norm_phi)
    return float(refined), float(simplified)


# -- the run loop ------------------------------------------------------------


def _fast_input_stepper(game: HiddenGame, eta_t: float, eta_p: float):
    """Closure performing one AltGDA step of an input game without the
    per-call validation of the public helpers (hot loop)."""
    W1F, W2F = game.minp.W1, game.minp.W2
    W1G, W2G = game.maxp.W1, game.maxp.W2
    actF, actG = game.minp.act, game.maxp.act
    A = game.coupling
    em, ep = game.eps_min, game.eps_max
    cf = 0.0 if game.center_min is None else game.center_min
    cg = 0.0 if game.center_max is None else game.center_max

    def step(th, ph):
        zg = W1G @ ph
        g = W2G @ actG.fn(zg)
        zf = W1F @ th
        f = W2F @ actF.fn(zf)
        vf = A @ g + em * (f - cf)
        th = th - eta_t * (W1F.T @ (actF.deriv(zf) * (W2F.T @ vf)))
        f = W2F @ actF.fn(W1F @ th)
        vg = A.T @ f - ep * (g - cg)
        ph = ph + eta_p * (W1G.T @ (actG.deriv(zg) * (W2G.T @ vg)))
        return th, ph

    return step


def run(
    game: HiddenGame,
    config: SolverConfig,
    theta0: np.ndarray,
    phi0: np.ndarray,
    cancel=None,
) -> TrajectoryRecord:
    """Run AltGDA for the configured horizon, auditing every audit_every
    steps; the stop_grad_tol early exit is evaluated at audit points.

    Monitors flag sigma_min dropping below the floor and the iterate leaving
    the certified radius; policy 'warn' records and continues, 'abort' stops.
    cancel, when given, is polled once per step and stops the run cleanly.
    """
    theta = np.array(theta0, dtype=float)
    phi = np.array(phi0, dtype=float)
    if theta.shape != (game.theta_dim,) or phi.shape != (game.phi_dim,):
        raise ValueError("initial iterates do not match the game's dimensions")
    record = TrajectoryRecord()
    path_length = 0.0

    stepper = None
    if game.family == "input":
        stepper = _fast_input_stepper(game, config.eta_theta, config.eta_phi)

    def audit(t: int) -> AuditRow:
        gt, gp = game_grads(game, theta, phi)
        JF, JG = game.jacobians(theta, phi)
        sminF, _ = empirical_spectrum(JF)
        sminG, _ = empirical_spectrum(JG)
        pot = None
        if config.saddle_value is not None or game.quadratic is not None:
            pot = potential(
                game, theta, phi, config.lambda_pot,
                config.saddle_value if config.saddle_value is not None else 0.0,
                config.inner_tol,
            )
        lat_f, lat_g = game.latent_outputs(theta, phi)
        dist = float(np.sqrt(
            np.sum((theta - theta0) ** 2) + np.sum((phi - phi0) ** 2)
        ))
        row = AuditRow(
            t=t,
            value=game_value(game, theta, phi),
            grad_norm_theta=float(np.linalg.norm(gt)),
            grad_norm_phi=float(np.linalg.norm(gp)),
            sigma_min_F=sminF,
            sigma_min_G=sminG,
            dist_from_init=dist,
            path_length=path_length,
            potential=pot,
            latent_min=np.array(lat_f),
            latent_max=np.array(lat_g),
        )
        record.rows.append(row)
        if sminF < config.sigma_min_floor or sminG < config.sigma_min_floor:
            record.violations.append(f"t={t}: sigma_min below floor {config.sigma_min_floor:g}")
        if config.radius is not None and dist > config.radius:
            record.violations.append(f"t={t}: left certified ball of radius {config.radius:g}")
        return row

    stop_reason = "horizon"
    t = 0
    while t < config.horizon:
        if t % config.audit_every == 0:
            before = len(record.violations)
            row = audit(t)
            if len(record.violations) > before and config.monitor_policy == "abort":
                stop_reason = "monitor"
                break
            if config.stop_grad_tol > 0 and max(
                row.grad_norm_theta, row.grad_norm_phi
            ) <= config.stop_grad_tol:
                stop_reason = "grad_tol"
                break
        else:
            row = None
        if cancel is not None and cancel():
            stop_reason = "cancelled"
            break
        old_theta, old_phi = theta, phi
        if stepper is not None:
            theta, phi = stepper(theta, phi)
            if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(phi))):
                raise FloatingPointError(f"non-finite iterate at step {t}")
        else:
            theta, phi = altgda_step(game, theta, phi, config.eta_theta, config.eta_phi)
        disp = float(np.linalg.norm(theta - old_theta) + np.linalg.norm(phi - old_phi))
        path_length += disp
        if row is not None:
            row.step_displacement = disp
        t += 1

    if not record.rows or record.rows[-1].t != t:
        audit(t)
    record.stopped_at = t
    record.stop_reason = stop_reason
    record.final_theta = theta
    record.final_phi = phi
    if config.saddle_value is None and game.quadratic is None:
        # potential relative to a post-hoc inner solve at the final iterate
        try:
            _, m = best_response_max(game, theta, phi, tol=config.inner_tol)
            record.estimated_potential = float(
                (1.0 + config.lambda_pot) * (m - game_value(game, theta, phi))
            )
        except Exception:
            record.estimated_potential = None
    return record
