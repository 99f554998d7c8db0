"""Command-line front end: canonical experiments, initialization checks,
spectrum audits, and the theory-constant calculator.

Exit codes are a stable contract: 0 success, 1 experiment or check failure,
2 usage/configuration error.  Configuration files are flat key=value lines
under [section] headers; unknown keys are errors so typos cannot silently
fall back to defaults.  The HIDDENMM_OUT environment variable overrides the
output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .certificates import active_lipschitz
from .experiments import build_rps, emit, project_simplex
from .players import certify_input_jacobian, init_gaussian, make_activation
from .solver import run, theory_constants
from .validator import check_input_game_init

__all__ = ["main", "parse_config", "ConfigError"]


class ConfigError(Exception):
    pass


def parse_config(text: str) -> dict[str, dict[str, str]]:
    """Parse [section] headers with key=value lines; comments start with #."""
    sections: dict[str, dict[str, str]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, val = line.split("=", 1)
        sections[current][key.strip()] = val.strip()
    return sections


def _load_section(path: str | None, section: str, allowed: set[str]) -> dict[str, str]:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    sections = parse_config(text)
    data = sections.get(section, {})
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
    return data


def _out_dir(flag_value: str | None) -> Path:
    env = os.environ.get("HIDDENMM_OUT")
    path = Path(env) if env else Path(flag_value or "hiddenmm-out")
    path.mkdir(parents=True, exist_ok=True)
    return path


# -- rps ----------------------------------------------------------------------

_RPS_KEYS = {
    "d1", "seeds", "steps", "out", "jobs", "threshold",
    "sigma_slack", "eta", "eps", "audit_every", "init_radius",
}


def _rps_one_seed(args: tuple) -> dict:
    (seed, d1, steps, eta, eps, slack, init_radius, audit_every, out) = args
    spec = build_rps(
        d1=d1, seed=seed, horizon=steps, eta=eta, eps=eps,
        sigma_slack=slack, init_radius=init_radius, audit_every=audit_every,
    )
    spec.csv_path = str(Path(out) / f"rps_seed{seed}.csv")
    spec.json_path = str(Path(out) / f"rps_seed{seed}.json")
    spec.svg_path = str(Path(out) / f"rps_seed{seed}.svg")
    traj = run(spec.game, spec.config, spec.theta0, spec.phi0)
    last = traj.rows[-1]
    target = spec.game.uniform_target
    dist_f = float(np.linalg.norm(project_simplex(last.latent_min) - target))
    dist_g = float(np.linalg.norm(project_simplex(last.latent_max) - target))
    success = dist_f <= spec.success_tol and dist_g <= spec.success_tol
    emit(traj, spec, summary_extra={
        "seed": seed,
        "dist_to_uniform_min": dist_f,
        "dist_to_uniform_max": dist_g,
        "success": success,
    })
    return {"seed": seed, "dist_min": dist_f, "dist_max": dist_g, "success": success}


def cmd_rps(args) -> int:
    cfg = _load_section(args.config, "rps", _RPS_KEYS)
    d1 = int(cfg.get("d1", args.d1))
    n_seeds = int(cfg.get("seeds", args.seeds))
    steps = int(cfg.get("steps", args.steps))
    jobs = int(cfg.get("jobs", args.jobs))
    threshold = float(cfg.get("threshold", args.threshold))
    slack = float(cfg.get("sigma_slack", args.sigma_slack))
    eta = float(cfg.get("eta", args.eta))
    eps = float(cfg.get("eps", args.eps))
    audit_every = int(cfg.get("audit_every", args.audit_every))
    init_radius = float(cfg.get("init_radius", args.init_radius))
    out = _out_dir(cfg.get("out", args.out))
    if n_seeds < 1:
        print("need at least one seed", file=sys.stderr)
        return 2

    worker_args = [
        (seed, d1, steps, eta, eps, slack, init_radius, audit_every, str(out))
        for seed in range(n_seeds)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_rps_one_seed, worker_args))
    else:
        results = [_rps_one_seed(a) for a in worker_args]

    n_ok = sum(r["success"] for r in results)
    fraction = n_ok / n_seeds
    merged = {
        "schema": 1,
        "experiment": "rps",
        "config": {
            "d1": d1, "seeds": n_seeds, "steps": steps, "eta": eta, "eps": eps,
            "sigma_slack": slack, "init_radius": init_radius,
            "audit_every": audit_every, "threshold": threshold, "jobs": jobs,
        },
        "results": results,
        "success_fraction": fraction,
    }
    with open(out / "rps_summary.json", "w") as fh:
        json.dump(merged, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for r in results:
        status = "ok " if r["success"] else "FAIL"
        print(f"seed {r['seed']:3d}  {status}  dist_min={r['dist_min']:.3e}  dist_max={r['dist_max']:.3e}")
    print(f"success fraction: {fraction:.2f} (threshold {threshold:.2f})")
    return 0 if fraction >= threshold else 1


# -- check-init -----------------------------------------------------------------

_CHECK_KEYS = {
    "s1F", "s2F", "s1G", "s2G", "d1F", "d1G", "theta0_norm", "phi0_norm",
    "eps", "sigma_max_A", "C", "slack", "d0F", "d2F", "d0G", "d2G",
}


def cmd_check_init(args) -> int:
    cfg = _load_section(args.config, "check-init", _CHECK_KEYS)

    def need(key, cast=float):
        if key in cfg:
            return cast(cfg[key])
        val = getattr(args, key, None)
        if val is None:
            raise ConfigError(f"missing required key {key!r}")
        return cast(val)

    def opt(key, cast=int):
        if key in cfg:
            return cast(cfg[key])
        val = getattr(args, key, None)
        return None if val is None else cast(val)

    report = check_input_game_init(
        s1F=need("s1F"), s2F=need("s2F"), s1G=need("s1G"), s2G=need("s2G"),
        d1F=need("d1F", int), d1G=need("d1G", int),
        theta0_norm=need("theta0_norm"), phi0_norm=need("phi0_norm"),
        eps=need("eps"), sigma_max_A=need("sigma_max_A"),
        C=float(cfg.get("C", args.C)), slack=float(cfg.get("slack", args.slack)),
        d0F=opt("d0F"), d2F=opt("d2F"), d0G=opt("d0G"), d2G=opt("d2G"),
    )
    print(report.table())
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(report.to_jsonable(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if not report.overall:
        for c in report.failing():
            print(f"failing: {c.name}", file=sys.stderr)
    return 0 if report.overall else 1


# -- audit-spectrum ---------------------------------------------------------------

_AUDIT_KEYS = {"d0", "d1", "d2", "sigma1", "sigma2", "theta_norm", "seeds", "C", "frequency"}


def cmd_audit_spectrum(args) -> int:
    cfg = _load_section(args.config, "audit-spectrum", _AUDIT_KEYS)
    d0 = int(cfg.get("d0", args.d0))
    d1 = int(cfg.get("d1", args.d1))
    d2 = int(cfg.get("d2", args.d2))
    sigma1 = float(cfg.get("sigma1", args.sigma1))
    sigma2 = float(cfg.get("sigma2", args.sigma2))
    theta_norm = float(cfg.get("theta_norm", args.theta_norm))
    n_seeds = int(cfg.get("seeds", args.seeds))
    C = float(cfg.get("C", args.C))
    frequency = float(cfg.get("frequency", args.frequency))
    if n_seeds < 1:
        print("need at least one seed", file=sys.stderr)
        return 2

    act = make_activation("gelu")
    ok_min = ok_max = vacuous = 0
    for seed in range(n_seeds):
        net = init_gaussian((d0, d1, d2), sigma1, sigma2, seed, act)
        rng = np.random.default_rng(seed + 10_000)
        theta = rng.normal(size=d0)
        theta *= theta_norm / np.linalg.norm(theta)
        cert = certify_input_jacobian(net, theta, C=C)
        if cert.verdict == "Vacuous":
            vacuous += 1
            ok_min += 1  # an unfalsifiable lower bound cannot be violated
        else:
            ok_min += cert.sigma_min_emp >= cert.sigma_min_lower
        ok_max += cert.sigma_max_emp <= cert.sigma_max_upper
    freq_min = ok_min / n_seeds
    freq_max = ok_max / n_seeds
    print(f"seeds: {n_seeds}  vacuous: {vacuous}")
    print(f"sigma_min bound frequency: {freq_min:.3f}")
    print(f"sigma_max bound frequency: {freq_max:.3f}")
    passed = freq_min >= frequency and freq_max >= frequency
    print(f"required frequency: {frequency:.2f} -> {'PASS' if passed else 'FAIL'}")
    return 0 if passed else 1


# -- constants ---------------------------------------------------------------------

_CONST_KEYS = {
    "mu_theta", "mu_phi", "l_grad", "eta_theta", "eta_phi", "p0",
    "lambda_pot", "radius", "nu_max",
}


def cmd_constants(args) -> int:
    cfg = _load_section(args.config, "constants", _CONST_KEYS)
    mu_theta = float(cfg.get("mu_theta", args.mu_theta))
    mu_phi = float(cfg.get("mu_phi", args.mu_phi))
    l_grad = float(cfg.get("l_grad", args.l_grad))
    eta_theta = cfg.get("eta_theta", args.eta_theta)
    eta_phi = cfg.get("eta_phi", args.eta_phi)
    eta_theta = mu_phi**2 / (18.0 * l_grad**3) if eta_theta is None else float(eta_theta)
    eta_phi = 1.0 / l_grad if eta_phi is None else float(eta_phi)
    p0 = float(cfg.get("p0", args.p0))
    radius = cfg.get("radius", args.radius)
    nu_max = cfg.get("nu_max", args.nu_max)
    l_act = None
    if radius is not None and nu_max is not None:
        l_act = active_lipschitz(l_grad, float(radius), float(nu_max))

    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        tc = theory_constants(
            mu_theta, mu_phi, l_grad, eta_theta, eta_phi, p0,
            L_act=l_act, radius=None if radius is None else float(radius),
        )
    rows = [
        ("L_grad", tc.L_grad),
        ("L_big", tc.L_big),
        ("alpha1", tc.alpha1),
        ("c", tc.c),
        ("eta_theta", eta_theta),
        ("eta_phi", eta_phi),
        ("P0", p0),
        ("path_bound", tc.path_bound),
        ("L_act", tc.L_act),
        ("radius", tc.radius),
    ]
    for name, val in rows:
        print(f"{name:>11}: {'n/a' if val is None else format(val, '.9g')}")
    if not tc.contractive:
        print("flag: no contraction certificate (c outside (0, 1))")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(tc.to_jsonable(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


# -- entry point ---------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hiddenmm", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("rps", help="run the hidden rock-paper-scissors experiment")
    q.add_argument("--d1", type=int, default=1280)
    q.add_argument("--seeds", type=int, default=10, help="number of seeds (0..n-1)")
    q.add_argument("--steps", type=int, default=100_000)
    q.add_argument("--out", default=None, help="output dir (HIDDENMM_OUT overrides)")
    q.add_argument("--jobs", type=int, default=1)
    q.add_argument("--threshold", type=float, default=0.9)
    q.add_argument("--sigma-slack", dest="sigma_slack", type=float, default=2.5)
    q.add_argument("--eta", type=float, default=0.01)
    q.add_argument("--eps", type=float, default=1.0)
    q.add_argument("--audit-every", dest="audit_every", type=int, default=1000)
    q.add_argument("--init-radius", dest="init_radius", type=float, default=10.0)
    q.add_argument("--config", default=None)
    q.set_defaults(func=cmd_rps)

    q = sub.add_parser("check-init", help="margin table for the init condition system")
    for key in ("s1F", "s2F", "s1G", "s2G", "theta0_norm", "phi0_norm", "eps", "sigma_max_A"):
        q.add_argument(f"--{key}", type=float, default=None)
    for key in ("d1F", "d1G", "d0F", "d2F", "d0G", "d2G"):
        q.add_argument(f"--{key}", type=int, default=None)
    q.add_argument("--C", type=float, default=1.0)
    q.add_argument("--slack", type=float, default=1.0)
    q.add_argument("--config", default=None)
    q.add_argument("--json", default=None)
    q.set_defaults(func=cmd_check_init)

    q = sub.add_parser("audit-spectrum", help="sampled singular-value bound frequencies")
    q.add_argument("--d0", type=int, default=2)
    q.add_argument("--d1", type=int, default=512)
    q.add_argument("--d2", type=int, default=2)
    q.add_argument("--sigma1", type=float, default=0.015)
    q.add_argument("--sigma2", type=float, default=1.0)
    q.add_argument("--theta-norm", dest="theta_norm", type=float, default=1.0)
    q.add_argument("--seeds", type=int, default=100)
    q.add_argument("--C", type=float, default=1.0)
    q.add_argument("--frequency", type=float, default=0.95)
    q.add_argument("--config", default=None)
    q.set_defaults(func=cmd_audit_spectrum)

    q = sub.add_parser("constants", help="contraction and path-length constants")
    q.add_argument("--mu-theta", dest="mu_theta", type=float, default=1.0)
    q.add_argument("--mu-phi", dest="mu_phi", type=float, default=1.0)
    q.add_argument("--l-grad", dest="l_grad", type=float, default=2.0)
    q.add_argument("--eta-theta", dest="eta_theta", type=float, default=None)
    q.add_argument("--eta-phi", dest="eta_phi", type=float, default=None)
    q.add_argument("--p0", type=float, default=1.0)
    q.add_argument("--radius", type=float, default=None)
    q.add_argument("--nu-max", dest="nu_max", type=float, default=None)
    q.add_argument("--config", default=None)
    q.add_argument("--json", default=None)
    q.set_defaults(func=cmd_constants)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
