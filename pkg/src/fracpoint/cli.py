"""Batch front-end.

    fracpoint solve-state   --config run.toml [--out DIR] [--seed N] [--quiet]
    fracpoint solve-adjoint --config run.toml
    fracpoint optimize      --config run.toml
    fracpoint verify        [--config run.toml]   (built-in default problem without --config)
    fracpoint report        --config run.toml

Exit codes: 0 ok, 2 configuration, 3 solver failure, 4 optimizer did not
converge, 5 verification failure.
"""

import argparse
import csv
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import optimal_control as oc
from .errors import AssumptionViolation, ConfigurationError, DomainError, NumericalError, SolverError
from .nonlinearity import get_nonlinearity
from .oracle_verify import manufactured_semilinear, run_verification
from .spectral_core import EigenBasis, grid_points, hr_norm, synthesize

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_NONCONVERGED, EXIT_VERIFY = 0, 2, 3, 4, 5

TOP_KEYS = {"s", "theta", "K", "M", "alpha", "a", "b", "output_dir",
            "nonlinearity", "forcing", "control", "observations", "optimizer"}
SECTION_KEYS = {
    "nonlinearity": {"name", "gamma"},
    "forcing": {"preset", "coefficients"},
    "control": {"constant", "coefficients", "file", "space"},
    "optimizer": {"tol", "max_iter", "seed", "n_dir"},
}
OBS_KEYS = {"x", "y", "target"}
FORCING_PRESETS = {"zero", "coefficients", "manufactured"}
# "grid": one value per grid point; "constant": one scalar; "halves": constant on x < 1/2 and x > 1/2
CONTROL_SPACES = {"grid", "constant", "halves"}

DEFAULT_CONFIG = """\
s = 0.75
theta = 0.5
K = 8
alpha = 0.1
a = -1.0
b = 1.0

[nonlinearity]
name = "cubic"

[forcing]
preset = "zero"

[[observations]]
x = 0.3
y = 0.4
target = 0.4

[[observations]]
x = 0.7
y = 0.6
target = 0.3
"""


class ConfigError(ConfigurationError):
    def __init__(self, message, path="<config>", line=None):
        loc = f"{path}:{line}" if line else path
        super().__init__(f"{loc}: {message}")


@dataclass
class RunConfig:
    """Validated run parameters; ``build_problem`` turns them into solver objects."""

    s: float
    theta: float
    K: int
    M: int | None
    alpha: float
    a: float
    b: float
    nonlinearity: dict
    forcing: dict
    control: dict
    observations: list
    optimizer: dict = field(default_factory=dict)
    output_dir: str = "fracpoint_out"
    source: str = "<config>"
    base_dir: Path = Path(".")

    @property
    def seed(self):
        return int(self.optimizer.get("seed", 0))


def _line_of(text, key, section=None):
    start = 0
    if section:
        head = re.search(rf"^\s*\[\[?\s*{re.escape(section)}\s*\]", text, re.M)
        start = head.end() if head else 0
    pat = re.compile(rf"^\s*(\[\[?\s*)?{re.escape(key)}\b", re.M)
    m = pat.search(text, start)
    return text.count("\n", 0, m.start()) + 1 if m else None


def parse_config(text, path="<config>"):
    """Parse and validate TOML text, rejecting unknown keys with a line number."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", path, m and int(m.group(1))) from None

    def reject(keys, allowed, where, section=None):
        for k in keys:
            if k not in allowed:
                raise ConfigError(f"unknown key {k!r} in {where}", path,
                                  _line_of(text, k, section))

    reject(raw, TOP_KEYS, "top level")
    for sec, allowed in SECTION_KEYS.items():
        val = raw.get(sec, {})
        if not isinstance(val, dict):
            raise ConfigError(f"[{sec}] must be a table", path, _line_of(text, sec))
        reject(val, allowed, f"[{sec}]", sec)
    obs = raw.get("observations", [])
    if not isinstance(obs, list):
        raise ConfigError("observations must be an array of tables", path,
                          _line_of(text, "observations"))
    for o in obs:
        reject(o, OBS_KEYS, "[[observations]]", "observations")
        missing = OBS_KEYS - set(o)
        if missing:
            raise ConfigError(f"observation missing {sorted(missing)}", path,
                              _line_of(text, "observations"))

    def num(key, default=None, kind=float):
        if key not in raw:
            if default is None:
                raise ConfigError(f"missing required key {key!r}", path)
            return default
        val = raw[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{key} must be a number", path, _line_of(text, key))
        if kind is int and int(val) != val:
            raise ConfigError(f"{key} must be an integer", path, _line_of(text, key))
        return kind(val)

    forcing = dict(raw.get("forcing", {}))
    preset = forcing.setdefault("preset", "zero")
    if preset not in FORCING_PRESETS:
        raise ConfigError(f"unknown forcing preset {preset!r}; choose from "
                          f"{sorted(FORCING_PRESETS)}", path, _line_of(text, "preset", "forcing"))
    cfg = RunConfig(
        s=num("s"),
        theta=num("theta", 0.5),
        K=num("K", kind=int),
        M=num("M", kind=int) if "M" in raw else None,
        alpha=num("alpha"),
        a=num("a"),
        b=num("b"),
        nonlinearity=dict(raw.get("nonlinearity", {"name": "zero"})),
        forcing=forcing,
        control=dict(raw.get("control", {})),
        observations=[dict(o) for o in obs],
        optimizer=dict(raw.get("optimizer", {})),
        output_dir=str(raw.get("output_dir", "fracpoint_out")),
        source=path,
    )
    try:
        build_problem(cfg)
    except DomainError:
        raise
    except (ConfigurationError, AssumptionViolation) as exc:
        raise ConfigError(str(exc), path) from None
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    cfg = parse_config(text, str(path))
    cfg.base_dir = path.parent
    return cfg


def _coeff_array(entries, K, what):
    arr = np.zeros((K, K))
    for e in entries:
        if len(e) != 3:
            raise ConfigurationError(f"{what} entries must be [m, n, value]")
        m, n, v = e
        if not (1 <= m <= K and 1 <= n <= K):
            raise ConfigurationError(f"{what} mode ({m}, {n}) outside 1..{K}")
        arr[int(m) - 1, int(n) - 1] = float(v)
    return arr


def build_problem(cfg):
    """Return ``(problem, info)``; ``info`` carries the manufactured state when used."""
    basis = EigenBasis(cfg.K, cfg.s, cfg.theta, cfg.M)
    nl_params = {k: v for k, v in cfg.nonlinearity.items() if k != "name"}
    nl = get_nonlinearity(cfg.nonlinearity.get("name", "zero"), **nl_params)
    info = {}
    preset = cfg.forcing["preset"]
    coeffs = cfg.forcing.get("coefficients", [])
    if preset == "zero":
        f = np.zeros((basis.M, basis.M))
    elif preset == "coefficients":
        f = synthesize(_coeff_array(coeffs, basis.K, "forcing"), basis)
    else:
        u_star = _coeff_array(coeffs, basis.K, "manufactured state")
        f = manufactured_semilinear(u_star, nl, basis)
        info["u_star"] = u_star
    obs = [((o["x"], o["y"]), o["target"]) for o in cfg.observations]
    space = cfg.control.get("space", "grid")
    if space not in CONTROL_SPACES:
        raise ConfigurationError(f"unknown control space {space!r}; choose from "
                                 f"{sorted(CONTROL_SPACES)}")
    labels = None
    if space == "constant":
        labels = np.zeros((basis.M, basis.M), dtype=int)
    elif space == "halves":
        labels = (basis.grid()[0] > 0.5).astype(int)
    prob = oc.ControlProblem(f, cfg.alpha, cfg.a, cfg.b, obs, nl, basis, control_labels=labels)
    return prob, info


def control_from_config(cfg, prob):
    ctl = cfg.control
    basis = prob.basis
    if "file" in ctl:
        q = read_grid_csv(cfg.base_dir / ctl["file"], basis.M)
    elif "coefficients" in ctl:
        q = synthesize(_coeff_array(ctl["coefficients"], basis.K, "control"), basis)
    else:
        q = np.full((basis.M, basis.M), float(ctl.get("constant", 0.0)))
    return oc.restrict_to_controls(q, prob)


# ---------------------------------------------------------------------------
# output


def _fmt(x):
    return format(float(x), ".17g")


def write_grid_csv(path, values):
    values = np.asarray(values)
    t = grid_points(values.shape[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "x", "y", "value"])
        for i in range(values.shape[0]):
            for j in range(values.shape[1]):
                w.writerow([i, j, _fmt(t[i]), _fmt(t[j]), _fmt(values[i, j])])


def write_coeff_csv(path, coeffs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "n", "coeff"])
        for m in range(coeffs.shape[0]):
            for n in range(coeffs.shape[1]):
                w.writerow([m + 1, n + 1, _fmt(coeffs[m, n])])


def write_history_csv(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "j", "residual", "step", "active_fraction"])
        for r in history.records:
            w.writerow([r["iter"], _fmt(r["j"]), _fmt(r["residual"]), _fmt(r["step"]),
                        _fmt(r["active_fraction"])])


def read_grid_csv(path, M):
    out = np.full((M, M), np.nan)
    try:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                out[int(row["i"]), int(row["j"])] = float(row["value"])
    except (OSError, KeyError, ValueError, IndexError) as exc:
        raise ConfigurationError(f"cannot read control grid {path}: {exc}") from None
    if np.isnan(out).any():
        raise ConfigurationError(f"control grid {path} does not cover the {M}x{M} grid")
    return out


def read_coeff_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    K = max(int(r["m"]) for r in rows)
    out = np.zeros((K, K))
    for r in rows:
        out[int(r["m"]) - 1, int(r["n"]) - 1] = float(r["coeff"])
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve_state(cfg, out, say):
    prob, info = build_problem(cfg)
    q = control_from_config(cfg, prob)
    u = oc.state(q, prob)
    write_coeff_csv(out / "state_coeffs.csv", u)
    write_grid_csv(out / "state_grid.csv", synthesize(u, prob.basis))
    say(f"state H^(2s) norm = {_fmt(hr_norm(u, 2 * prob.basis.s, prob.basis))}")
    say(f"state max-grid norm = {_fmt(np.max(np.abs(synthesize(u, prob.basis))))}")
    if "u_star" in info:
        say(f"manufactured recovery error = {_fmt(np.max(np.abs(u - info['u_star'])))}")
    return EXIT_OK


def cmd_solve_adjoint(cfg, out, say):
    prob, _ = build_problem(cfg)
    q = control_from_config(cfg, prob)
    u = oc.state(q, prob)
    rep = oc.adjoint(q, u, prob, report=True)
    write_coeff_csv(out / "state_coeffs.csv", u)
    write_coeff_csv(out / "adjoint_coeffs.csv", rep.solution)
    write_grid_csv(out / "adjoint_grid.csv", synthesize(rep.solution, prob.basis))
    say(f"adjoint H^(s-theta) norm = {_fmt(rep.solution_norm)}")
    say(f"measure norm (sum of |u(z) - u_z|) = {_fmt(rep.measure_norm)}")
    say(f"truncated H^(-s-theta) norm of source (lower bound) = {_fmt(rep.rhs_dual_norm)}")
    say(f"stability ratio = {_fmt(rep.stability_ratio)}")
    return EXIT_OK


def _write_report(out, q, prob, cfg):
    rep = oc.stationarity_report(q, prob, n_dir=int(cfg.optimizer.get("n_dir", 64)),
                                 seed=cfg.seed)
    (out / "report.txt").write_text(rep.to_text())
    return rep


def cmd_optimize(cfg, out, say):
    prob, _ = build_problem(cfg)
    opts = cfg.optimizer
    q, hist = oc.optimize(prob, tol=float(opts.get("tol", 1e-9)),
                          max_iter=int(opts.get("max_iter", 500)))
    ev = oc.evaluate(q, prob)
    write_grid_csv(out / "control_grid.csv", q)
    write_coeff_csv(out / "state_coeffs.csv", ev.u)
    write_coeff_csv(out / "adjoint_coeffs.csv", ev.p)
    write_history_csv(out / "history.csv", hist)
    rep = _write_report(out, q, prob, cfg)
    say(f"optimizer: {hist.message} after {len(hist) - 1} iterations, j = {_fmt(ev.j)}")
    say(f"fixed-point residual = {_fmt(rep.fixed_point_residual)}; "
        f"sign violations = {rep.sign_violations}")
    return EXIT_OK if hist.converged else EXIT_NONCONVERGED


def cmd_report(cfg, out, say):
    prob, _ = build_problem(cfg)
    q = control_from_config(cfg, prob)
    rep = _write_report(out, q, prob, cfg)
    say(rep.to_text().rstrip())
    return EXIT_OK


def cmd_verify(cfg, out, say):
    summary = run_verification(build_problem(cfg)[0], seed=cfg.seed)
    (out / "verification.json").write_text(json.dumps(summary, indent=2, default=float))
    for p in summary["probes"]:
        say(f"{p['status'].upper():13s} {p['name']}")
    for name in summary["warnings"]:
        say(f"warning: {name} inconclusive (remainder at round-off level)")
    if summary["failures"]:
        say("verification FAILED: " + ", ".join(summary["failures"]))
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {
    "solve-state": cmd_solve_state,
    "solve-adjoint": cmd_solve_adjoint,
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "report": cmd_report,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="fracpoint", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, required=name != "verify")
        sp.add_argument("--out", type=Path, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    say = (lambda msg: None) if args.quiet else print
    try:
        if args.config is not None:
            cfg = load_config(args.config)
        else:
            cfg = parse_config(DEFAULT_CONFIG, "<default config>")
        if args.seed is not None:
            cfg.optimizer["seed"] = args.seed
        out = args.out or Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, say)
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, NumericalError, AssumptionViolation) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
