"""Canonical experiments: the rock-paper-scissors hidden input game, the
exactly-quadratic testbed, and small neural ERM parameter games, together
with a grid-search gap oracle and the CSV/JSON/SVG emitters.

File formats are stability-guaranteed under schema=1: the CSV carries a
fixed header and one audit row per line; the JSON summary echoes the fully
resolved configuration.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .objectives import (
    HiddenGame,
    QuadraticTestbed,
    game_value,
    make_loss,
    make_quadratic_game,
)
from .players import init_gaussian, make_activation
from .solver import SolverConfig, TrajectoryRecord
from .validator import check_neural_game_init, experiment_init_sigmas

__all__ = [
    "ExperimentSpec",
    "rps_coupling",
    "build_rps",
    "build_quadratic_testbed",
    "build_neural_erm",
    "brute_force_gap",
    "project_simplex",
    "emit",
]

SCHEMA_VERSION = 1

_GELU = make_activation("gelu")


@dataclass
class ExperimentSpec:
    """A named game plus solver configuration, seeds, and success metric."""

    name: str
    game: HiddenGame
    config: SolverConfig
    seeds: list[int] = field(default_factory=lambda: [0])
    success_metric: str = "GradNorm"  # LatentDistanceToTarget | NashGap | GradNorm
    success_tol: float = 1e-2
    theta0: np.ndarray | None = None
    phi0: np.ndarray | None = None
    csv_path: str | None = None
    json_path: str | None = None
    svg_path: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if self.success_tol <= 0:
            raise ValueError("success_tol must be positive")


def rps_coupling(scale: float = 10.0) -> np.ndarray:
    """Skew payoff matrix of rock-paper-scissors, scaled to keep gradients
    from being too small."""
    return scale * np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])


def sample_in_ball(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    """Uniform draw from the Euclidean ball of the given radius."""
    v = rng.normal(size=dim)
    v /= np.linalg.norm(v)
    return radius * rng.uniform() ** (1.0 / dim) * v


def build_rps(
    d1: int = 1280,
    seed: int = 0,
    horizon: int = 100_000,
    eta: float = 0.01,
    eps: float = 1.0,
    init_radius: float = 10.0,
    sigma_slack: float = 2.5,
    audit_every: int = 1000,
) -> ExperimentSpec:
    """Hidden rock-paper-scissors between two width-d1 nets over 5-dim inputs;
    both players regularize toward the uniform mixed strategy.

    sigma_slack is the free constant in the first-layer deviation rule
    sigma1 = slack * min(d1^-1/2, d1^-7/8, 1); at the default width the unit
    constant leaves the Jacobians too small for the 1e5-step budget, so the
    default here is 2.5 (echoed in the run summary).
    """
    d0, d2 = 5, 3
    if d1 < 256 * d0:
        raise ValueError(f"d1 must be at least {256 * d0} for the width condition")
    s1, s2 = experiment_init_sigmas(d1, slack=sigma_slack)
    rng = np.random.default_rng(seed)
    net_f = init_gaussian((d0, d1, d2), s1, s2, seed=int(rng.integers(2**31)), act=_GELU)
    net_g = init_gaussian((d0, d1, d2), s1, s2, seed=int(rng.integers(2**31)), act=_GELU)
    uniform = np.full(3, 1.0 / 3.0)
    game = HiddenGame(
        minp=net_f,
        maxp=net_g,
        coupling=rps_coupling(),
        eps=eps,
        family="input",
        uniform_target=uniform,
    )
    config = SolverConfig(
        eta_theta=eta,
        eta_phi=eta,
        horizon=horizon,
        audit_every=audit_every,
        seed=seed,
    )
    return ExperimentSpec(
        name="rps",
        game=game,
        config=config,
        seeds=[seed],
        success_metric="LatentDistanceToTarget",
        success_tol=1e-2,
        theta0=sample_in_ball(rng, d0, init_radius),
        phi0=sample_in_ball(rng, d0, init_radius),
        extra={"sigma1": s1, "sigma2": s2, "sigma_slack": sigma_slack, "init_radius": init_radius},
    )


def build_quadratic_testbed(
    mu_theta: float,
    mu_phi: float,
    B: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    horizon: int = 10_000,
    audit_every: int = 100,
    seed: int = 0,
    init_scale: float = 1.0,
) -> ExperimentSpec:
    """Exactly strongly-convex-strongly-concave quadratic game with the
    contraction-certified step sizes eta_theta = mu_phi^2/(18 L^3),
    eta_phi = 1/L, and all audit quantities in closed form."""
    game = make_quadratic_game(mu_theta, mu_phi, B, a, b)
    L = game.quadratic.grad_smoothness()
    rng = np.random.default_rng(seed)
    theta0 = game.quadratic.a + init_scale * rng.normal(size=len(game.quadratic.a))
    phi0 = game.quadratic.b + init_scale * rng.normal(size=len(game.quadratic.b))
    config = SolverConfig(
        eta_theta=mu_phi**2 / (18.0 * L**3),
        eta_phi=1.0 / L,
        horizon=horizon,
        audit_every=audit_every,
        seed=seed,
        saddle_value=game.quadratic.saddle_value(),
    )
    return ExperimentSpec(
        name="quadratic",
        game=game,
        config=config,
        seeds=[seed],
        success_metric="NashGap",
        success_tol=1e-6,
        theta0=theta0,
        phi0=phi0,
        extra={"L_grad": L, "mu_theta": mu_theta, "mu_phi": mu_phi},
    )


def build_neural_erm(
    n: int,
    d0F: int,
    d1F: int,
    d0G: int,
    d1G: int,
    dlat: int,
    loss_kind: str = "mse",
    seed: int = 0,
    coupling_scale: float = 0.5,
    horizon: int = 4000,
    eta: float = 0.05,
    force: bool = False,
) -> ExperimentSpec:
    """Separable parameter game: each player fits its own unit-norm Gaussian
    dataset under a strongly convex latent loss, coupled bilinearly through a
    shared bounded-norm matrix.

    The width check (kappa = 1) must pass unless force is set.
    """
    if n < max(d0F, d0G):
        raise ValueError("need at least as many samples as input dimensions")
    rng = np.random.default_rng(seed)
    s1F, s2F = 1.0 / np.sqrt(d0F * d1F), 1.0
    s1G, s2G = 1.0 / np.sqrt(d0G * d1G), 1.0
    loss = make_loss(loss_kind) if loss_kind != "cross_entropy_l2" else make_loss(loss_kind, reg_lambda=1.0)
    for tag, (s1, d0, d1) in {"F": (s1F, d0F, d1F), "G": (s1G, d0G, d1G)}.items():
        rep = check_neural_game_init(s1, 1.0, d0, d1, n, loss.mu)
        if not rep.overall and not force:
            raise ValueError(
                f"width check failed for player {tag}:\n{rep.table()}\n(pass force=True to override)"
            )

    def dataset(d0):
        X = rng.normal(size=(n, d0))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        Y = rng.normal(size=(n, dlat))
        Y *= min(1.0, 1.0 / np.linalg.norm(Y))  # total label norm capped at 1
        return X, Y

    X_F, Y_F = dataset(d0F)
    X_G, Y_G = dataset(d0G)
    A = rng.normal(size=(dlat, dlat))
    A *= coupling_scale / np.linalg.svd(A, compute_uv=False)[0]
    net_f = init_gaussian((d0F, d1F, dlat), s1F, s2F, seed=int(rng.integers(2**31)), act=_GELU)
    net_g = init_gaussian((d0G, d1G, dlat), s1G, s2G, seed=int(rng.integers(2**31)), act=_GELU)
    game = HiddenGame(
        minp=net_f,
        maxp=net_g,
        coupling=A,
        family="separable",
        datasets=(X_F, Y_F, X_G, Y_G),
        loss_min=loss,
        loss_max=loss,
    )
    from .objectives import flat_params

    config = SolverConfig(
        eta_theta=eta,
        eta_phi=eta,
        horizon=horizon,
        audit_every=max(1, horizon // 20),
        seed=seed,
        stop_grad_tol=1e-10,
    )
    return ExperimentSpec(
        name="neural_erm",
        game=game,
        config=config,
        seeds=[seed],
        success_metric="GradNorm",
        success_tol=1e-4,
        theta0=flat_params(net_f),
        phi0=flat_params(net_g),
        extra={"n": n, "loss_kind": loss_kind, "coupling_scale": coupling_scale},
    )


def brute_force_gap(
    game: HiddenGame,
    theta: np.ndarray,
    phi: np.ndarray,
    grid_radius: float,
    grid_steps: int = 41,
) -> float:
    """Grid-search approximation of the duality gap, for validating the
    solver-based gap on tiny instances only; deviations are enumerated on an
    axis-aligned grid of the given radius around the current point.

    The grid resolution (per-axis spacing) is 2*grid_radius/(grid_steps-1).
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if theta.size + phi.size > 4:
        raise ValueError("grid search is limited to total input dimension 4")
    if grid_steps > 41:
        raise ValueError("grid_steps is capped at 41 per axis")
    offsets = np.linspace(-grid_radius, grid_radius, grid_steps)

    def grid_around(center):
        axes = [center[i] + offsets for i in range(center.size)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    best_max = -np.inf
    for cand in grid_around(phi):
        best_max = max(best_max, game_value(game, theta, cand))
    best_min = np.inf
    for cand in grid_around(theta):
        best_min = min(best_min, game_value(game, cand, phi))
    return float(best_max - best_min)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, v.size + 1) > (css - 1.0))[0][-1]
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - tau, 0.0)


# -- emitters ----------------------------------------------------------------


def _csv_header(dim_f: int, dim_g: int) -> str:
    cols = [
        "t",
        "value",
        "grad_norm_theta",
        "grad_norm_phi",
        "sigma_min_F",
        "sigma_min_G",
        "dist_init",
        "path_length",
        "potential",
    ]
    cols += [f"latent_min[{i}]" for i in range(dim_f)]
    cols += [f"latent_max[{i}]" for i in range(dim_g)]
    cols += [f"latent_min_projected[{i}]" for i in range(dim_f)]
    cols += [f"latent_max_projected[{i}]" for i in range(dim_g)]
    return ",".join(cols)


def trajectory_csv(trajectory: TrajectoryRecord) -> str:
    """Render the audit rows as CSV text (schema=1, byte-stable)."""
    rows = trajectory.rows
    if not rows:
        return f"# schema={SCHEMA_VERSION}\n"
    dim_f, dim_g = rows[0].latent_min.size, rows[0].latent_max.size
    out = [f"# schema={SCHEMA_VERSION}", _csv_header(dim_f, dim_g)]
    for r in rows:
        cells = [
            str(r.t),
            repr(r.value),
            repr(r.grad_norm_theta),
            repr(r.grad_norm_phi),
            repr(r.sigma_min_F),
            repr(r.sigma_min_G),
            repr(r.dist_from_init),
            repr(r.path_length),
            "" if r.potential is None else repr(r.potential),
        ]
        pf, pg = project_simplex(r.latent_min), project_simplex(r.latent_max)
        cells += [repr(x) for x in r.latent_min]
        cells += [repr(x) for x in r.latent_max]
        cells += [repr(x) for x in pf]
        cells += [repr(x) for x in pg]
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def _bary_xy(p: np.ndarray, size=(800, 700), margin=60.0) -> tuple[float, float]:
    """Map a 3-vector on the simplex to canvas coordinates of the standard
    triangle (vertices: bottom-left, bottom-right, top)."""
    w, h = size
    verts = np.array(
        [
            [margin, h - margin],
            [w - margin, h - margin],
            [w / 2.0, margin],
        ]
    )
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    s = p.sum()
    p = p / s if s > 0 else np.full(3, 1.0 / 3.0)
    xy = p @ verts
    return float(xy[0]), float(xy[1])


def trajectory_svg(trajectory: TrajectoryRecord) -> str:
    """Standalone SVG of both players' projected latent trajectories on the
    2-simplex; dependency-free path/line elements on a fixed 800x700 canvas."""
    w, h = 800, 700
    tri = [_bary_xy(np.eye(3)[i]) for i in range(3)]
    star = _bary_xy(np.full(3, 1.0 / 3.0))

    def poly(points, color):
        if not points:
            return ""
        d = "M " + " L ".join(f"{x:.2f} {y:.2f}" for x, y in points)
        return f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>'

    pts_f = [_bary_xy(project_simplex(r.latent_min)) for r in trajectory.rows]
    pts_g = [_bary_xy(project_simplex(r.latent_max)) for r in trajectory.rows]
    tri_d = " ".join(f"{x:.2f},{y:.2f}" for x, y in tri)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<polygon points="{tri_d}" fill="none" stroke="black" stroke-width="1"/>',
        poly(pts_f, "#c0392b"),
        poly(pts_g, "#2471a3"),
        f'<circle cx="{star[0]:.2f}" cy="{star[1]:.2f}" r="4" fill="black"/>',
        f'<text x="{star[0] + 8:.2f}" y="{star[1] - 8:.2f}" font-size="14">uniform</text>',
        '<text x="20" y="24" font-size="14" fill="#c0392b">min player</text>',
        '<text x="20" y="44" font-size="14" fill="#2471a3">max player</text>',
        "</svg>",
    ]
    return "\n".join(p for p in parts if p)


def emit(
    trajectory: TrajectoryRecord,
    spec: ExperimentSpec,
    summary_extra: dict | None = None,
) -> dict:
    """Write the CSV audit log, the JSON run summary, and (when a path is
    set) the simplex SVG; returns the summary dict."""
    summary = {
        "schema": SCHEMA_VERSION,
        "name": spec.name,
        "seeds": spec.seeds,
        "success_metric": spec.success_metric,
        "success_tol": spec.success_tol,
        "config": spec.config.to_jsonable(),
        "extra": spec.extra,
        "stopped_at": trajectory.stopped_at,
        "stop_reason": trajectory.stop_reason,
        "violations": trajectory.violations,
        "final_path_length": trajectory.final_path_length,
        "estimated_potential": trajectory.estimated_potential,
        "rows": len(trajectory.rows),
    }
    if summary_extra:
        summary.update(summary_extra)
    if spec.csv_path:
        Path(spec.csv_path).parent.mkdir(parents=True, exist_ok=True)
        with open(spec.csv_path, "w") as fh:
            fh.write(trajectory_csv(trajectory))
    if spec.json_path:
        Path(spec.json_path).parent.mkdir(parents=True, exist_ok=True)
        with open(spec.json_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if spec.svg_path:
        Path(spec.svg_path).parent.mkdir(parents=True, exist_ok=True)
        with open(spec.svg_path, "w") as fh:
            fh.write(trajectory_svg(trajectory))
    return summary
