"""Gradient-dominance moduli, certified radii, active Lipschitz constants,
and the solution-concept equivalence probe.

Hidden strong convexity with modulus mu composed with a map whose Jacobian
has least singular value s yields gradient dominance with modulus mu * s^2;
inside the ball of radius mu_jac/(2*beta) around a certified initialization
the Jacobian spectrum stays sandwiched and the modulus survives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import HiddenGame, best_response_max, best_response_min, game_grads, game_value

__all__ = [
    "PlCertificate",
    "pl_moduli",
    "active_lipschitz",
    "effective_smoothness",
    "certified_radius",
    "equivalence_probe",
    "build_pl_certificate",
]


def pl_moduli(mu_latent: float, sigma_min: float) -> float:
    """Gradient-dominance modulus mu * sigma_min^2 of a hidden strongly
    convex objective seen through a map with least singular value sigma_min."""
    if mu_latent < 0 or sigma_min < 0:
        raise ValueError("inputs must be nonnegative")
    return float(mu_latent * sigma_min**2)


def active_lipschitz(L_grad: float, R: float, nu_max: float) -> float:
    """Bound 4.5 * L * R * nu on the latent gradient norms over the radius-R
    ball; L is the latent smoothness, nu the larger Jacobian upper bound."""
    if L_grad < 0 or R < 0 or nu_max < 0:
        raise ValueError("inputs must be nonnegative")
    return float(4.5 * L_grad * R * nu_max)


def effective_smoothness(L_act: float, beta_max: float) -> float:
    """Parameter-space gradient smoothness: the active Lipschitz constant of
    the latent gradient times the larger map smoothness."""
    if L_act < 0 or beta_max < 0:
        raise ValueError("inputs must be nonnegative")
    return float(L_act * beta_max)


def certified_radius(
    mu_jac_F: float,
    mu_jac_G: float,
    beta_F: float,
    beta_G: float,
    aggregate: str = "min",
) -> float:
    """Ball radius mu_jac/(2*beta) inside which both Jacobian spectra stay
    sandwiched.  aggregate 'min' (conservative default) takes the smaller
    Jacobian lower bound with the larger smoothness; 'max' the opposite pair.
    """
    if aggregate == "min":
        return float(min(mu_jac_F, mu_jac_G) / (2.0 * max(beta_F, beta_G)))
    if aggregate == "max":
        return float(max(mu_jac_F, mu_jac_G) / (2.0 * min(beta_F, beta_G)))
    raise ValueError("aggregate must be 'min' or 'max'")


@dataclass(frozen=True)
class PlCertificate:
    """Moduli chain from latent strong convexity to parameter-space gradient
    dominance, with the certified radius and smoothness constants."""

    mu_latent_min: float
    mu_latent_max: float
    sigma_min_F: float
    sigma_min_G: float
    mu_theta_eff: float
    mu_phi_eff: float
    radius: float
    L_act: float
    L_grad_eff: float

    def to_jsonable(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def build_pl_certificate(
    mu_latent_min: float,
    mu_latent_max: float,
    sigma_min_F: float,
    sigma_min_G: float,
    nu_max: float,
    beta_F: float,
    beta_G: float,
    L_latent: float,
    radius_aggregate: str = "min",
) -> PlCertificate:
    """Assemble the full certificate from spectra and smoothness constants."""
    radius = certified_radius(sigma_min_F, sigma_min_G, beta_F, beta_G, radius_aggregate)
    l_act = active_lipschitz(L_latent, radius, nu_max)
    return PlCertificate(
        mu_latent_min=float(mu_latent_min),
        mu_latent_max=float(mu_latent_max),
        sigma_min_F=float(sigma_min_F),
        sigma_min_G=float(sigma_min_G),
        mu_theta_eff=pl_moduli(mu_latent_min, sigma_min_F),
        mu_phi_eff=pl_moduli(mu_latent_max, sigma_min_G),
        radius=radius,
        L_act=l_act,
        L_grad_eff=effective_smoothness(l_act, max(beta_F, beta_G)),
    )


def equivalence_probe(
    game: HiddenGame,
    theta: np.ndarray,
    phi: np.ndarray,
    tol: float = 1e-8,
) -> tuple[float, float, float]:
    """Measure how far (theta, phi) is from optimality under the three
    equivalent notions: returns (stationarity_eps, saddle_eps, minimax_eps).

    stationarity_eps is the larger gradient norm; saddle_eps the larger
    one-sided best-response improvement; minimax_eps the duality gap (the sum
    of the two one-sided improvements).
    """
    gt, gp = game_grads(game, theta, phi)
    stationarity = float(max(np.linalg.norm(gt), np.linalg.norm(gp)))
    v = game_value(game, theta, phi)
    _, up = best_response_max(game, theta, phi, tol=tol)
    _, down = best_response_min(game, phi, theta, tol=tol)
    gain_max = float(up - v)
    gain_min = float(v - down)
    saddle = max(gain_max, gain_min)
    minimax = gain_max + gain_min
    return stationarity, saddle, minimax
