"""Command-line front end: ``qclab <command> [--config FILE] [--seed N] [--out DIR] [--serial] [key=value ...]``."""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CompactSupportWarning, ConfigurationError, QclabError
from .reports import SCHEMA_VERSION, all_checks_pass, canonical_json, csv_text, make_envelope, svg_plot

COMMANDS = ("transform-check", "solve", "packing", "weighted-norm", "smirnov", "hausdorff", "riemann")


@dataclasses.dataclass
class RunConfig:
    command: str
    k: tuple = ()
    t: tuple = ()
    half_width: float | None = None
    resolution: int | None = None
    seeds: int | None = None
    depth: int | None = None
    trials: int | None = None
    tol: float = 1e-8
    levels: tuple = ()
    mu: str = "radial"
    family: str | None = None
    families: int = 10
    solver_seeds: int = 1
    solver_k: float = 0.5
    subgrid: bool = True
    schema_version: str = SCHEMA_VERSION

    def to_dict(self):
        return dataclasses.asdict(self)


DEFAULTS = {
    "transform-check": {"half_width": 4.0, "resolution": 512},
    "solve": {"half_width": 4.0, "resolution": 1024, "k": (0.5,)},
    "packing": {},
    "weighted-norm": {"t": (1.5,), "levels": (3, 4, 5, 6), "trials": 8},
    "smirnov": {"half_width": 4.0, "resolution": 1024, "k": (0.2, 0.4, 0.6), "t": (0.5, 1.0, 1.5, 2.0),
                "seeds": 3, "levels": (2, 3, 4, 5, 6)},
    "hausdorff": {"half_width": 2.0, "resolution": 1024, "k": (0.2, 0.4), "seeds": 2, "depth": 10},
    "riemann": {"k": (0.3, 0.5, 0.7), "half_width": 4.0, "resolution": 1024},
}

_FLOAT_LISTS = {"k", "t"}
_INT_LISTS = {"levels"}
_FLOATS = {"half_width", "tol", "solver_k"}
_INTS = {"seed", "resolution", "seeds", "depth", "trials", "families", "solver_seeds"}
_BOOLS = {"subgrid"}
_STRINGS = {"mu", "family", "schema_version"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _FLOAT_LISTS:
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if key in _INT_LISTS:
            return tuple(int(v) for v in raw.split(",") if v.strip())
        if key in _FLOATS:
            return float(raw)
        if key in _INTS:
            return int(raw)
        if key in _BOOLS:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if key in _STRINGS:
            return raw
    except ValueError:
        raise ConfigurationError(f"field {key!r}: cannot parse {raw!r}") from None
    raise ConfigurationError(f"unknown field {key!r}")


def parse_pairs(pairs) -> dict:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise ConfigurationError(f"expected key=value, got {item!r}")
        key, _, val = item.partition("=")
        key = key.strip().replace("-", "_")
        out[key] = _parse_value(key, val)
    return out


def read_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file: {exc}") from None
    pairs = []
    for n, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigurationError(f"{path}:{n}: expected key = value")
        pairs.append(body)
    return parse_pairs(pairs)


def build_config(command: str, values: dict) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigurationError(f"unknown command {command!r}")
    merged = dict(DEFAULTS[command])
    merged.update(values)
    cfg = RunConfig(command=command, **merged)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig):
    def bad(field, msg):
        raise ConfigurationError(f"field {field!r}: {msg}")

    if cfg.schema_version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        bad("schema_version", f"unsupported {cfg.schema_version}")
    lo_k = 0.0 if cfg.command != "riemann" else 1e-12
    for v in cfg.k:
        if not lo_k <= v < 1:
            bad("k", f"{v} outside {'(0, 1)' if lo_k else '[0, 1)'}")
    for v in cfg.t:
        if not 0 < v <= 2:
            bad("t", f"{v} outside (0, 2]")
    if cfg.half_width is not None and not (cfg.half_width > 0 and math.isfinite(cfg.half_width)):
        bad("half_width", "must be positive")
    if cfg.resolution is not None and (cfg.resolution < 16 or cfg.resolution % 2):
        bad("resolution", "must be an even integer >= 16")
    for name in ("seeds", "trials", "families"):
        v = getattr(cfg, name)
        if v is not None and v < 1:
            bad(name, "must be at least 1")
    if cfg.solver_seeds < 0:
        bad("solver_seeds", "must be non-negative")
    if cfg.depth is not None and not 1 <= cfg.depth <= 14:
        bad("depth", "must lie in 1..14")
    if not 0 < cfg.tol < 1:
        bad("tol", "must lie in (0, 1)")
    if cfg.mu not in ("radial", "random", "zero"):
        bad("mu", "must be radial, random or zero")
    if not 0 <= cfg.solver_k < 1:
        bad("solver_k", "must lie in [0, 1)")
    for v in cfg.levels:
        if v < 1:
            bad("levels", "levels must be positive")
    if cfg.family is not None and not Path(cfg.family).is_file():
        bad("family", f"no such file {cfg.family}")


# ---------------------------------------------------------------------------
# Commands.  Each returns (payload, sidecars) with sidecars mapping file names
# to text or bytes; nothing is written until the whole command has succeeded.
# ---------------------------------------------------------------------------


def _spec(cfg):
    from .field_core import GridSpec

    return GridSpec(cfg.half_width, cfg.resolution)


def cmd_transform_check(cfg: RunConfig, seed: int):
    from .field_core import ComplexField, GridSpec, beurling_transform, cauchy_transform, d_bar, d_z
    from .field_core import planar_beurling_transform, planar_cauchy_transform
    from .oracles import direct_beurling_quadrature

    spec = _spec(cfg)
    z = spec.z
    disk = ComplexField.from_function(spec, lambda w: (np.abs(w) < 1).astype(complex))
    S = beurling_transform(disk).samples
    ring = (np.abs(z) > 1.1) & (np.abs(z) < 2)
    ref = -1 / z[ring] ** 2
    annulus = float(np.linalg.norm(S[ring] - ref) / np.linalg.norm(ref))
    inner = np.abs(z) < 0.9
    inside_sup = float(np.abs(S[inner]).max())

    rng = np.random.default_rng([seed, 0])
    raw = (rng.standard_normal(z.shape) + 1j * rng.standard_normal(z.shape)) * spec.guard_mask
    raw[spec.guard_mask] -= raw[spec.guard_mask].mean()
    f = ComplexField(spec, raw)
    parseval = abs(beurling_transform(f).l2_norm() - f.l2_norm()) / f.l2_norm()

    bump = ComplexField.from_function(spec, lambda w: np.exp(-np.abs(w - 0.2 + 0.1j) ** 2 / (2 * 0.3**2)))
    with warnings.catch_warnings():
        # the identity is exact for periodic fields, so the tail outside the band is harmless here
        warnings.simplefilter("ignore", CompactSupportWarning)
        lhs = beurling_transform(d_bar(bump)).samples
    rhs = d_z(bump).samples
    identity = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))

    C_per = cauchy_transform(disk).samples
    C_pl = planar_cauchy_transform(disk).samples
    out = (np.abs(z) > 1.1) & (np.abs(z) < 2)
    cref_in, cref_out = np.conj(z[inner]), 1 / z[out]
    cauchy = {
        "periodic_inside": float(np.linalg.norm(C_per[inner] - cref_in) / np.linalg.norm(cref_in)),
        "periodic_outside": float(np.linalg.norm(C_per[out] - cref_out) / np.linalg.norm(cref_out)),
        "planar_inside": float(np.linalg.norm(C_pl[inner] - cref_in) / np.linalg.norm(cref_in)),
        "planar_outside": float(np.linalg.norm(C_pl[out] - cref_out) / np.linalg.norm(cref_out)),
    }

    small = GridSpec(4.0, 64)
    quad_errors = []
    for n in range(5):
        r = np.random.default_rng([seed, 1, n])
        c = complex(*r.uniform(-0.8, 0.8, 2))
        s = r.uniform(0.3, 0.5)
        a = complex(*r.standard_normal(2))
        g = ComplexField.from_function(
            small, lambda w: a * np.exp(-np.abs(w - c) ** 2 / (2 * s * s)) * small.guard_mask
        )
        fast = planar_beurling_transform(g, where=small.guard_mask).samples[small.guard_mask]
        slow = direct_beurling_quadrature(g, small.guard_mask)
        quad_errors.append(float(np.linalg.norm(fast - slow) / np.linalg.norm(slow)))

    payload = {
        "grid": [spec.L, spec.N],
        "beurling_disk_annulus_rel_l2": annulus,
        "beurling_disk_inside_sup": inside_sup,
        "parseval_rel": parseval,
        "beurling_dbar_identity_rel": identity,
        "cauchy_disk": cauchy,
        "quadrature_rel_l2": quad_errors,
        "checks": {
            "annulus": annulus <= 0.02,
            "parseval": parseval <= 1e-12,
            "identity": identity <= 1e-8,
            "quadrature": max(quad_errors) <= 0.02,
        },
    }
    return payload, {}


def cmd_solve(cfg: RunConfig, seed: int):
    import io

    from .beltrami_solver import (
        BeltramiCoefficient,
        radial_stretch_coefficient,
        radial_stretch_map,
        random_dilatation,
        save_solution,
        solve_principal,
    )
    from .regions import UNIT_DISK

    spec = _spec(cfg)
    if cfg.mu == "radial":
        mu = radial_stretch_coefficient(spec, 2.0)
    elif cfg.mu == "zero":
        mu = BeltramiCoefficient.zero(spec)
    else:
        mu = random_dilatation(spec, cfg.k[0], seed, UNIT_DISK)
    sol = solve_principal(mu, tol=cfg.tol)
    ratios = sol.convergence_ratios
    mx, med = sol.decay_profile
    checks = {
        "residual": sol.residual <= cfg.tol,
        "contraction": bool(ratios.size == 0 or ratios.max() <= mu.k + 0.05),
        "decay": mx <= 10 * med if med > 0 else mx == 0,
    }
    payload = {
        "grid": [spec.L, spec.N],
        "mu": cfg.mu,
        "k": mu.k,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "residual_history": list(sol.residual_history),
        "max_ratio": float(ratios.max()) if ratios.size else 0.0,
        "decay_max": mx,
        "decay_median": med,
    }
    if cfg.mu == "radial":
        pts = np.array([0.25, 0.5j, -0.75, 1.5 * np.exp(0.3j)])
        exact = radial_stretch_map(pts)
        err = np.abs(sol(pts) - exact) / np.abs(exact)
        payload["point_errors"] = err.tolist()
        checks["closed_form"] = bool(err.max() <= 0.01)
    if cfg.mu == "zero":
        checks["identity"] = bool(np.abs(sol.displacement.samples).max() <= 1e-12)
    payload["checks"] = checks
    buf = io.BytesIO()
    save_solution(sol, buf)
    rows = [(n + 1, r) for n, r in enumerate(sol.residual_history)]
    return payload, {"residuals.csv": csv_text(["iteration", "residual"], rows), "solution.npz": buf.getvalue()}


def cmd_packing(cfg: RunConfig, seed: int):
    from .dyadic_geometry import DyadicSquare, PackingWeight, SquareFamily, packing_result, smoothness_tau
    from .oracles import packing_alpha_bruteforce, random_family, smoothness_tau_bruteforce

    if cfg.family is not None:
        fams = [SquareFamily.load(cfg.family)]
    else:
        fams = [random_family(np.random.default_rng([seed, n])) for n in range(cfg.families)]
    rows, records = [], []
    all_match = True
    weight_ok = True
    for n, fam in enumerate(fams):
        res = packing_result(fam)
        tau = smoothness_tau(fam)
        a_bf = packing_alpha_bruteforce(fam)
        t_bf = smoothness_tau_bruteforce(fam)
        match = res.alpha == a_bf and tau == t_bf
        all_match &= match
        w = PackingWeight(fam)
        rng = np.random.default_rng([seed, n, 1])
        bound = max(1.0, res.alpha)
        worst = 0.0
        for _ in range(1000):
            g = int(rng.integers(-1, 7))
            span = 1 << max(g, 0)
            q = DyadicSquare(g, int(rng.integers(0, span)), int(rng.integers(0, span)), fam.lattice)
            worst = max(worst, w.measure([q]) / q.side**fam.t)
        weight_ok &= worst <= bound * (1 + 1e-12)
        records.append({"members": len(fam), "t": fam.t, "alpha": res.alpha, "admissible": res.admissible,
                        "alpha_bruteforce": a_bf, "tau": tau, "tau_bruteforce": t_bf,
                        "weight_ratio_max": worst})
        rows.append((n, len(fam), fam.t, res.alpha, a_bf, tau, t_bf, match))
    payload = {"families": records, "checks": {"oracle_match": bool(all_match), "weight_bound": bool(weight_ok)}}
    sidecar = csv_text(["family", "members", "t", "alpha", "alpha_bruteforce", "tau", "tau_bruteforce", "match"],
                       rows)
    return payload, {"packing.csv": sidecar}


def cmd_weighted_norm(cfg: RunConfig, seed: int):
    from .dyadic_geometry import PackingWeight, SquareFamily
    from .field_core import GridSpec
    from .weighted_operators import REFINEMENT_LATTICE, estimate_operator_norm, refinement_trend

    t = cfg.t[0]
    reports, spread = refinement_trend(cfg.levels, t, cfg.trials, seed)
    single = SquareFamily.from_triples([(1, 0, 0)], t, REFINEMENT_LATTICE)
    one = estimate_operator_norm(PackingWeight(single), GridSpec(1.0, 256), cfg.trials, seed)
    payload = {
        "levels": [r.to_dict() for r in reports],
        "estimates": [r.estimate for r in reports],
        "spread": spread,
        "single_square": one.estimate,
        "checks": {"trend": spread < 2.0, "single_square": one.estimate <= 1.05},
    }
    rows = [(r.level, r.tau, r.alpha, r.estimate) for r in reports]
    return payload, {"weighted.csv": csv_text(["level", "tau", "alpha", "estimate"], rows)}


def cmd_smirnov(cfg: RunConfig, seed: int):
    from .distortion_experiments import nested_layout, run_corollary_trial, run_smirnov_batch

    spec = _spec(cfg)
    rows, reports = [], []
    for k in cfg.k:
        for s in range(cfg.seeds):
            for r in run_smirnov_batch(k, cfg.t, seed + s, spec):
                reports.append(r.to_dict())
                rows.append((k, r.t, len(r.radii), seed + s, r.lhs, r.rhs, r.ratio, r.passed))
    cor_rows, spreads = [], {}
    for k in cfg.k:
        vals = []
        for m in cfg.levels:
            rep = run_corollary_trial(k, nested_layout(m), seed, spec, level=m)
            vals.append(rep.ratio)
            cor_rows.append((k, m, seed, rep.ratio))
        spreads[str(k)] = max(vals) / min(vals)
    payload = {
        "smirnov": reports,
        "max_ratio": max(r["ratio"] for r in reports),
        "corollary_spread": spreads,
        "checks": {
            "smirnov": all(r["passed"] for r in reports),
            "corollary_bounded": all(v <= 3 for v in spreads.values()),
        },
    }
    side = {
        "smirnov.csv": csv_text(["k", "t", "level", "seed", "lhs", "rhs", "ratio", "pass"], rows),
        "corollary.csv": csv_text(["k", "level", "seed", "ratio"], cor_rows),
    }
    return payload, side


def cmd_hausdorff(cfg: RunConfig, seed: int):
    from .hausdorff_lab import box_dimension, covering_sums, generate_quasiline, quasiline_points, theorem_main_check

    spec = _spec(cfg)
    E, ball = [(-0.5, 0.5)], (0.0, 1.0)
    rows, runs = [], []
    curve = None
    bounded, growth, boxes = True, [], True
    for k in cfg.k:
        for s_idx in range(cfg.seeds):
            sd = seed + s_idx
            sol = generate_quasiline(k, sd, spec)
            crit = covering_sums(sol, E, ball, 1 + k * k, cfg.depth, k, allow_subgrid=cfg.subgrid)
            sub = covering_sums(sol, E, ball, 1 + k * k / 2, cfg.depth, k, allow_subgrid=cfg.subgrid)
            dense = covering_sums(sol, E, ball, 1 + k * k, cfg.depth, k, dense=True, allow_subgrid=cfg.subgrid)
            pts = quasiline_points(sol, -1.0, 1.0, 2**16)
            fit = box_dimension(pts, k=k, finest=2 * spec.h)
            local = theorem_main_check(sol, k, 0.1, 0.3, cfg.depth, allow_subgrid=cfg.subgrid)
            S4 = crit.at(4) if 4 in crit.generations else crit.sums[0]
            ok_b = max(crit.sums) <= 3 * S4
            last = sub.generations[-1]
            g = sub.at(last) / sub.at(4) if 4 in sub.generations else float("nan")
            bounded &= ok_b
            growth.append(g)
            boxes &= fit.slope <= 1 + k * k + 0.05
            runs.append({"k": k, "seed": sd, "critical": crit.to_dict(), "subcritical": sub.to_dict(),
                         "dense_critical": dense.to_dict(), "box": fit.to_dict(), "local": local.to_dict(),
                         "growth": g, "iterations": sol.iterations})
            for series, tag in ((crit, "critical"), (sub, "subcritical"), (dense, "dense")):
                for m, c, v in zip(series.generations, series.counts, series.sums):
                    rows.append((k, sd, tag, series.s, m, c, v, series.normalizer))
            if curve is None:
                curve = (k, sd, pts[:: max(1, len(pts) // 4096)])
    per_k = {}
    for k in cfg.k:
        gs = [r["growth"] for r in runs if r["k"] == k]
        per_k[str(k)] = sum(1 for v in gs if v >= 1.5) >= math.ceil(len(gs) / 2)
    payload = {
        "runs": runs,
        "checks": {"critical_bounded": bool(bounded), "subcritical_growth": all(per_k.values()),
                   "box_dimension": bool(boxes)},
    }
    k0, s0, c = curve
    side = {
        "covering.csv": csv_text(["k", "seed", "series", "s", "m", "count", "S_m", "normalizer"], rows),
        "curve.csv": csv_text(["x", "y"], [(float(p.real), float(p.imag)) for p in c]),
        "curve.svg": svg_plot([(f"k={k0} seed={s0}", c.real, c.imag)], "quasiline", equal_aspect=True),
    }
    return payload, side


def cmd_riemann(cfg: RunConfig, seed: int):
    from .riemann_boundary import Cap, PowerMap, area_distortion, layer_cake_consistency, solver_backed_riemann_tail
    from .riemann_boundary import tail_statistics

    records, rows, series = [], [], []
    checks = {"slope": True, "constant": True, "caps": True, "layer_cake": True}
    for k in cfg.k:
        pm = PowerMap(k)
        tails = tail_statistics(pm, k)
        const = pm.weak_constant()
        caps = [area_distortion(pm, Cap(2.0**-j), k).ratio for j in range(3, 9)]
        mean = float(np.mean(caps))
        lc = [layer_cake_consistency(pm, Cap(d), k).discrepancy for d in (1 / 8, 1 / 64)]
        ok = {
            "slope": abs(tails.slope + 2 / k) <= 0.05,
            "constant": abs(tails.sup_scaled / const - 1) <= 0.05,
            "caps": max(abs(c / mean - 1) for c in caps) <= 0.10,
            "layer_cake": max(lc) <= 0.03,
        }
        for key, v in ok.items():
            checks[key] &= bool(v)
        records.append({"k": k, "tails": tails.to_dict(), "closed_form_constant": const, "cap_ratios": caps,
                        "layer_cake": lc, "ok": ok})
        rows += [(k, r, m, s) for r, m, s in zip(tails.rhos, tails.measures, tails.scaled)]
        series.append((f"k={k}", tails.rhos, tails.measures))
        ref = np.asarray(tails.rhos)
        series.append((f"slope -2/k={-2 / k:.3g}", ref, const * ref ** (-2 / k)))
    solver = []
    if cfg.solver_seeds:
        spec = _spec(cfg)
        sk = cfg.solver_k
        ok_s = True
        for s in range(cfg.solver_seeds):
            tails, sol = solver_backed_riemann_tail(sk, seed + s, spec)
            fine = not tails.degenerate and tails.slope <= -2 / sk + 0.1
            ok_s &= fine
            solver.append({"k": sk, "seed": seed + s, "tails": tails.to_dict(), "ok": fine})
        checks["solver_tail"] = bool(ok_s)
    payload = {"power_map": records, "solver_backed": solver, "checks": checks}
    side = {
        "tails.csv": csv_text(["k", "rho", "measure", "scaled"], rows),
        "tails.svg": svg_plot(series, "superlevel measure vs rho", logx=True, logy=True),
    }
    return payload, side


RUNNERS = {
    "transform-check": cmd_transform_check,
    "solve": cmd_solve,
    "packing": cmd_packing,
    "weighted-norm": cmd_weighted_norm,
    "smirnov": cmd_smirnov,
    "hausdorff": cmd_hausdorff,
    "riemann": cmd_riemann,
}


def run_command(cfg: RunConfig, seed: int):
    """Execute a validated configuration; returns ``(envelope, sidecars)``."""
    start = time.perf_counter()
    payload, side = RUNNERS[cfg.command](cfg, seed)
    env = make_envelope(cfg.command, cfg.to_dict(), payload, seed, time.perf_counter() - start)
    return env, side


def _parser():
    p = argparse.ArgumentParser(prog="qclab", description="Quasiconformal distortion workbench")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--out", help="output directory (default $QCLAB_OUT or ./qclab-out/<command>)")
    p.add_argument("--serial", action="store_true", help="force serial execution")
    p.add_argument("--version", action="version", version=f"qclab {__version__}")
    p.add_argument("overrides", nargs="*", help="key=value overrides")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        values = read_config_file(args.config) if args.config else {}
        values.update(parse_pairs(args.overrides))
        seed = values.pop("seed", None)
        cfg = build_config(args.command, values)
    except ConfigurationError as exc:
        print(f"qclab: usage error: {exc}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else (seed if seed is not None else 0)
    base = args.out or os.environ.get("QCLAB_OUT")
    out = Path(base) if base else Path("qclab-out") / args.command
    try:
        env, side = run_command(cfg, seed)
    except QclabError as exc:
        print(f"qclab {args.command}: {exc}", file=sys.stderr)
        return 1
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(canonical_json(env) + "\n")
    for name, content in side.items():
        target = out / name
        if isinstance(content, bytes):
            target.write_bytes(content)
        else:
            target.write_text(content)
    ok = all_checks_pass(env["payload"])
    print(f"qclab {args.command}: {'all checks passed' if ok else 'some checks failed'} -> {out / 'report.json'}")
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
