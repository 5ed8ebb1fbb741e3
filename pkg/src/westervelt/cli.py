"""Command-line entry point.

Subcommands: ``run`` (single integration, final-state snapshot),
``convergence`` (error ladder with fitted slopes), ``compare``
(decomposition matrix), ``realistic`` (large-scale pulse, nonlinear vs
linear).  All outputs are CSV with a '#'-prefixed fingerprint comment
line; numbers are written in shortest round-trip form so repeated runs
with the same config are byte-identical.  Exit codes: 0 success, 1 usage
or configuration error, 2 numerical failure (blowup, degeneracy, Newton
divergence) -- partial CSV with a failure tag is still written.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import experiments as exp
from .errors import WesterveltError
from .grid import DIRICHLET, H3H1, L2L2, PERIODIC, state_norm
from .model import Decomposition, ModelParams, check_nondegeneracy
from .splitting import (IntegratorConfig, SCHEME_PRESETS, SplitScheme,
                        integrate)
from .subsolvers import (CLOSED_FORM, CRANK_NICOLSON, EXPLICIT_EULER,
                         IMPLICIT_EULER, RK2_EXPLICIT, InnerScheme)

_INNER_TAGS = (EXPLICIT_EULER, IMPLICIT_EULER, RK2_EXPLICIT, CRANK_NICOLSON,
               CLOSED_FORM)

_DEFAULT_LADDER_DIVISORS = (10, 20, 40, 80, 160, 320)


class ConfigError(ValueError):
    """Configuration file is malformed or violates an invariant."""


@dataclass
class RunConfig:
    """Fully resolved run configuration (defaults applied, validated)."""

    scenario: str = "model_problem"
    custom: dict | None = None
    decomposition: str = "I"
    scheme: str | list = "lie_ab"
    inner_a: dict = field(default_factory=dict)
    inner_b: dict = field(default_factory=dict)
    num_points: int | None = None
    n_steps: int | None = None
    t_final: float | None = None
    ladder: list | None = None
    nu_min: float = 1e-3
    refinement: int = exp.DEFAULT_REFINEMENT
    sigma: float = 0.25
    trajectory_stride: int = 0
    seed: int | None = None
    output_dir: str = "."

    def canonical_dict(self) -> dict:
        return {
            "scenario": self.custom if self.custom is not None else self.scenario,
            "decomposition": self.decomposition,
            "scheme": self.scheme,
            "inner_a": self.inner_a,
            "inner_b": self.inner_b,
            "num_points": self.num_points,
            "n_steps": self.n_steps,
            "t_final": self.t_final,
            "ladder": self.ladder,
            "nu_min": self.nu_min,
            "refinement": self.refinement,
            "sigma": self.sigma,
            "trajectory_stride": self.trajectory_stride,
            "seed": self.seed,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.canonical_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_KNOWN_KEYS = {
    "scenario", "decomposition", "scheme", "inner_A", "inner_B", "M", "N",
    "T", "ladder", "nu_min", "refinement", "sigma", "trajectory_stride",
    "seed", "output_dir",
}

_INNER_KEYS = {"tag", "n_sub", "newton_tol", "newton_max_iter"}


def _parse_inner(raw, key) -> dict:
    if isinstance(raw, str):
        raw = {"tag": raw}
    if not isinstance(raw, dict):
        raise ConfigError(f"{key} must be a scheme tag or an object")
    unknown = set(raw) - _INNER_KEYS
    if unknown:
        raise ConfigError(f"{key}: unknown keys {sorted(unknown)}")
    tag = raw.get("tag")
    if tag not in _INNER_TAGS:
        raise ConfigError(f"{key}: unknown inner scheme tag {tag!r}")
    return dict(raw)


def parse_config(path) -> RunConfig:
    """Load and validate a JSON run configuration.

    Unknown keys are rejected; defaults are filled afterwards by
    :func:`resolve_run`.
    """
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    unknown = set(raw) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")

    rc = RunConfig()
    scenario = raw.get("scenario", "model_problem")
    if isinstance(scenario, dict):
        rc.scenario = "custom"
        rc.custom = _validate_custom(scenario)
    elif scenario in exp.SCENARIOS:
        rc.scenario = scenario
    else:
        raise ConfigError(f"unknown scenario {scenario!r}")

    rc.decomposition = str(raw.get("decomposition", "I"))
    if rc.decomposition not in ("I", "II", "III", "IV"):
        raise ConfigError(f"unknown decomposition {rc.decomposition!r}")

    scheme = raw.get("scheme", "lie_ab")
    if isinstance(scheme, str):
        if scheme not in SCHEME_PRESETS:
            raise ConfigError(f"unknown scheme preset {scheme!r}")
        rc.scheme = scheme
    elif isinstance(scheme, list):
        rc.scheme = scheme
    else:
        raise ConfigError("scheme must be a preset name or a coefficient list")

    d = Decomposition(rc.decomposition)
    rc.inner_a = _parse_inner(raw.get("inner_A", IMPLICIT_EULER), "inner_A")
    default_b = CLOSED_FORM if d == Decomposition.I else rc.inner_a["tag"]
    rc.inner_b = _parse_inner(raw.get("inner_B", default_b), "inner_B")
    if rc.inner_a["tag"] == CLOSED_FORM:
        raise ConfigError("inner_A: the A-subproblem has no closed form")
    if rc.inner_b["tag"] == CLOSED_FORM and d != Decomposition.I:
        raise ConfigError(
            "inner_B: closed_form is restricted to decomposition I")
    if d == Decomposition.I and rc.inner_b["tag"] != CLOSED_FORM:
        raise ConfigError(
            "inner_B: decomposition I uses the closed-form B-solver")

    for key, attr, kind in (("M", "num_points", int), ("N", "n_steps", int),
                            ("T", "t_final", float), ("nu_min", "nu_min", float),
                            ("refinement", "refinement", int),
                            ("sigma", "sigma", float),
                            ("trajectory_stride", "trajectory_stride", int),
                            ("seed", "seed", int),
                            ("output_dir", "output_dir", str)):
        if key in raw:
            try:
                setattr(rc, attr, kind(raw[key]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: expected {kind.__name__}") from exc
    if rc.num_points is not None and rc.num_points < 3:
        raise ConfigError("M must be at least 3")
    if rc.n_steps is not None and rc.n_steps < 0:
        raise ConfigError("N must be non-negative")
    if not 0.0 < rc.sigma <= 1.0:
        raise ConfigError("sigma must be in (0, 1]")

    if "ladder" in raw:
        ladder = raw["ladder"]
        if isinstance(ladder, str):
            ladder = _parse_ladder_string(ladder)
        if (not isinstance(ladder, list) or len(ladder) < 1
                or not all(isinstance(x, (int, float)) and x > 0 for x in ladder)):
            raise ConfigError("ladder must be a list of positive step sizes")
        rc.ladder = [float(x) for x in ladder]
    return rc


def _parse_ladder_string(text: str) -> list:
    """Parse '1/10,1/20,...' or plain comma-separated numbers."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "/" in part:
            num, den = part.split("/")
            out.append(float(num) / float(den))
        else:
            out.append(float(part))
    return out


_PROFILE_KEYS = {"type", "amplitude", "width", "center", "scale"}


def _validate_custom(raw: dict) -> dict:
    keys = {"alpha", "beta", "gamma", "delta", "half_width", "bc_mode",
            "t_final", "psi0", "vel0", "name"}
    unknown = set(raw) - keys
    if unknown:
        raise ConfigError(f"custom scenario: unknown keys {sorted(unknown)}")
    if "gamma" in raw and "delta" in raw and raw["delta"] != 2 * raw["gamma"]:
        raise ConfigError("custom scenario: delta must equal 2*gamma")
    for prof_key in ("psi0", "vel0"):
        prof = raw.get(prof_key, {"type": "zero"})
        if not isinstance(prof, dict) or "type" not in prof:
            raise ConfigError(f"custom scenario: {prof_key} needs a 'type'")
        if set(prof) - _PROFILE_KEYS:
            raise ConfigError(f"custom scenario: bad keys in {prof_key}")
        if prof["type"] not in ("zero", "gaussian", "gaussian_slope"):
            raise ConfigError(
                f"custom scenario: unknown profile type {prof['type']!r}")
    if raw.get("bc_mode", DIRICHLET) not in (DIRICHLET, PERIODIC):
        raise ConfigError("custom scenario: bad bc_mode")
    return raw


def _profile(prof: dict):
    kind = prof.get("type", "zero")
    amp = float(prof.get("amplitude", 1.0))
    width = float(prof.get("width", 1.0))
    center = float(prof.get("center", 0.0))
    scale = float(prof.get("scale", 1.0))
    if kind == "zero":
        return lambda x: np.zeros_like(x)
    if kind == "gaussian":
        return lambda x: amp * np.exp(-width * (x - center) ** 2)
    # gaussian_slope: scale * d/dx of the gaussian profile
    return lambda x: (scale * amp * (-2.0 * width) * (x - center)
                      * np.exp(-width * (x - center) ** 2))


def build_scenario(rc: RunConfig) -> exp.Scenario:
    if rc.custom is not None:
        raw = rc.custom
        gamma = raw.get("gamma", raw.get("delta", 0.0) / 2.0)
        params = ModelParams(float(raw.get("alpha", 1.0)),
                             float(raw.get("beta", 1.0)), float(gamma))
        sc = exp.Scenario(
            name=raw.get("name", "custom"), params=params,
            half_width=float(raw.get("half_width", 8.0)),
            num_points=rc.num_points or 100,
            bc_mode=raw.get("bc_mode", DIRICHLET),
            t_final=float(raw.get("t_final", 1.0)),
            psi0=_profile(raw.get("psi0", {"type": "zero"})),
            vel0=_profile(raw.get("vel0", {"type": "zero"})),
        )
    elif rc.scenario == "realistic":
        sc = exp.realistic(rc.sigma)
    else:
        sc = exp.SCENARIOS[rc.scenario]()
    if rc.num_points is not None:
        sc = exp.Scenario(sc.name, sc.params, sc.half_width, rc.num_points,
                          sc.bc_mode, sc.t_final, sc.psi0, sc.vel0)
    if rc.t_final is not None:
        sc = exp.Scenario(sc.name, sc.params, sc.half_width, sc.num_points,
                          sc.bc_mode, rc.t_final, sc.psi0, sc.vel0)
    return sc


def build_integrator_config(rc: RunConfig) -> IntegratorConfig:
    if isinstance(rc.scheme, str):
        scheme = SCHEME_PRESETS[rc.scheme]
    else:
        try:
            coeffs = tuple((float(a), float(b)) for a, b in rc.scheme)
            scheme = SplitScheme("custom", coeffs, order_nominal=1)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid scheme coefficient list: {exc}") from exc
    inner_a = InnerScheme(**rc.inner_a)
    inner_b = InnerScheme(**rc.inner_b)
    try:
        return IntegratorConfig(Decomposition(rc.decomposition), scheme,
                                inner_a, inner_b, nu_min=rc.nu_min,
                                record_trajectory=rc.trajectory_stride > 0,
                                trajectory_stride=max(rc.trajectory_stride, 1))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def default_ladder(t_final: float) -> list:
    return [t_final / n for n in _DEFAULT_LADDER_DIVISORS]


# -- CSV output ---------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if x is None:
        return ""
    return str(x)


def _write_csv(path: Path, fingerprint: str, header: list, rows: list) -> None:
    lines = [f"# fingerprint={fingerprint}", ",".join(header)]
    lines += [",".join(_fmt(cell) for cell in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _write_snapshot(path: Path, fingerprint: str, state) -> None:
    x = state.grid.nodes()
    rows = list(zip(x.tolist(), state.psi.values.tolist(),
                    state.vel.values.tolist()))
    _write_csv(path, fingerprint, ["x", "psi", "vel"], rows)


# -- subcommands --------------------------------------------------------------

def cmd_run(rc: RunConfig, outdir: Path) -> int:
    sc = build_scenario(rc)
    cfg = build_integrator_config(rc)
    fp = rc.fingerprint()
    n = rc.n_steps if rc.n_steps is not None else 320
    u0 = sc.initial_state()
    status, message = "ok", ""
    result = None
    try:
        result = integrate(u0, sc.t_final, n, sc.params, cfg)
        final = result.state
    except WesterveltError as exc:
        status = exp._failure_tag(exc)
        message = str(exc)
        final = getattr(exc, "last_state", None) or u0
    _write_snapshot(outdir / "snapshot.csv", fp, final)
    rows = [
        ("status", status),
        ("failure", message),
        ("final_time", float(final.time)),
        ("n_steps", n),
        ("norm_l2l2", state_norm(final, L2L2)),
        ("norm_h3h1", state_norm(final, H3H1)),
        ("min_nondeg_factor",
         result.min_nondeg_factor if result is not None
         else check_nondegeneracy(final, sc.params).min_factor),
        ("a_solves", result.counters.a_solves if result else 0),
        ("b_solves", result.counters.b_solves if result else 0),
        ("newton_iters_a", result.counters.newton_iters_a if result else 0),
        ("newton_iters_b", result.counters.newton_iters_b if result else 0),
    ]
    _write_csv(outdir / "summary.csv", fp, ["field", "value"], rows)
    if result is not None and result.trajectory:
        for i, snap in enumerate(result.trajectory):
            _write_snapshot(outdir / f"trajectory_{i:04d}.csv", fp, snap)
    if status != "ok":
        print(f"numerical failure: {message}", file=sys.stderr)
        return 2
    return 0


def cmd_convergence(rc: RunConfig, outdir: Path) -> int:
    sc = build_scenario(rc)
    cfg = build_integrator_config(rc)
    fp = rc.fingerprint()
    ladder = rc.ladder or default_ladder(sc.t_final)
    try:
        report = exp.measure_errors(sc, cfg, ladder, rc.refinement, fp)
    except WesterveltError as exc:
        _write_csv(outdir / "convergence.csv", fp,
                   ["h", "kind", "err_l2l2", "err_h3h1", "status"],
                   [("", "none", "", "", exp._failure_tag(exc))])
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    rows = [(r.h, r.err_kind, r.err_l2l2, r.err_h3h1, r.status)
            for r in report.records]
    for (kind, norm), slope in sorted(report.slopes.items()):
        rows.append(("", f"slope_{kind}", slope if norm == "l2l2" else "",
                     slope if norm == "h3h1" else "", norm))
    _write_csv(outdir / "convergence.csv", fp,
               ["h", "kind", "err_l2l2", "err_h3h1", "status"], rows)
    failed = [r for r in report.records if r.status != "ok"]
    if failed:
        print(f"{len(failed)} ladder entries failed", file=sys.stderr)
        return 2
    return 0


def cmd_compare(rc: RunConfig, outdir: Path) -> int:
    sc = build_scenario(rc)
    fp = rc.fingerprint()
    ladder = rc.ladder or default_ladder(sc.t_final)
    comparison = exp.compare_decompositions(
        sc, ladder, inner_tag=rc.inner_a["tag"], refinement=rc.refinement,
        fingerprint=fp)
    rows = []
    any_failed = False
    for d in Decomposition:
        report = comparison.reports[d]
        eff = comparison.efforts[d]
        for r in report.records:
            if r.err_kind != exp.GLOBAL:
                continue
            any_failed = any_failed or r.status != "ok"
            rows.append((d.value, r.h, r.err_l2l2, r.err_h3h1, r.status,
                         eff.a_solves, eff.b_solves, eff.newton_iters_a,
                         eff.newton_iters_b))
        try:
            slope = report.slope(exp.GLOBAL, "l2l2")
            rows.append((d.value, "", slope, "", "slope_global", "", "", "", ""))
        except ValueError:
            any_failed = True
    _write_csv(outdir / "comparison.csv", fp,
               ["decomposition", "h", "err_l2l2", "err_h3h1", "status",
                "a_solves", "b_solves", "newton_iters_a", "newton_iters_b"],
               rows)
    return 2 if any_failed else 0


def cmd_realistic(rc: RunConfig, outdir: Path) -> int:
    fp = rc.fingerprint()
    try:
        res = exp.realistic_run(rc.sigma)
    except WesterveltError as exc:
        _write_csv(outdir / "realistic_summary.csv", fp, ["field", "value"],
                   [("status", exp._failure_tag(exc)), ("failure", str(exc))])
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    _write_snapshot(outdir / "realistic_nonlinear.csv", fp, res.nonlinear)
    _write_snapshot(outdir / "realistic_linear.csv", fp, res.linear)
    _write_csv(outdir / "realistic_summary.csv", fp, ["field", "value"], [
        ("status", "ok"),
        ("sigma", res.sigma),
        ("num_points", res.num_points),
        ("n_steps", res.n_steps),
        ("steepening_metric", res.steepening_metric),
        ("one_sidedness", res.one_sidedness),
        ("peak_x_initial", res.peak_x_initial),
        ("peak_x_final", res.peak_x_final),
    ])
    return 0


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1; argparse's default (2) is reserved for
    # numerical failures
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def main(argv=None) -> int:
    parser = _Parser(prog="westervelt",
                     description="Operator-splitting integrator for the 1-D "
                                 "Westervelt equation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "single integration, final-state snapshot"),
                           ("convergence", "error ladder and fitted slopes"),
                           ("compare", "decomposition comparison matrix"),
                           ("realistic", "large-scale pulse, nonlinear vs linear")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--output-dir", default=None)
        p.add_argument("--ladder", default=None,
                       help="override step sizes, e.g. '1/10,1/20,1/40'")
        p.add_argument("--sigma", type=float, default=None,
                       help="resolution scale for the realistic scenario")
    args = parser.parse_args(argv)

    try:
        rc = parse_config(args.config) if args.config else RunConfig()
        if args.ladder is not None:
            rc.ladder = _parse_ladder_string(args.ladder)
        if args.sigma is not None:
            if not 0.0 < args.sigma <= 1.0:
                raise ConfigError("sigma must be in (0, 1]")
            rc.sigma = args.sigma
        if args.output_dir is not None:
            rc.output_dir = args.output_dir
        outdir = Path(rc.output_dir)
        outdir.mkdir(parents=True, exist_ok=True)
        # fail fast on inconsistent scheme/decomposition combinations
        build_integrator_config(rc)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    command = {"run": cmd_run, "convergence": cmd_convergence,
               "compare": cmd_compare, "realistic": cmd_realistic}[args.command]
    return command(rc, outdir)


if __name__ == "__main__":
    sys.exit(main())
