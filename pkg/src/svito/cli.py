"""Command line entry point ``svito``.

Every run is described by an :class:`ExperimentConfig`.  Outputs go to
``<out>/<subcommand>-<hash>`` where ``hash`` is taken over the canonical
JSON of the config, so a run never touches another run's files.

Exit codes: 0 pass, 2 check failure, 3 inconclusive, 64 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import shutil
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 2, 3, 64
SCHEMA_VERSION = 1
SUBCOMMANDS = ("algebra-check", "isometry", "ito-verify", "bsde-solve", "accept-all")


class ConfigError(ValueError):
    """Malformed configuration; the message names the field (and line when known)."""


# problem payload keys and defaults per subcommand
PROBLEM_DEFAULTS: dict[str, dict[str, Any]] = {
    "algebra-check": {"trials": 100_000, "box_trials": None},
    "isometry": {"set": "[0,1]", "recipe": "mix"},
    "ito-verify": {"phi": "square", "x0": 0.0, "f": "[0.5,1]", "g": "[0,0]", "recipe": "mix"},
    "bsde-solve": {
        "xi": {"g": "identity", "alpha": 0.0, "beta": 1.0, "scale": 1.0},
        "driver": {"name": "zero"},
        "degree": 3,
        "ridge": 1e-8,
        "max_iter": 30,
        "write_paths": 16,
        "scheme": "one-step",
    },
    "accept-all": {"scale": "full", "only": None},
}
TOLERANCE_DEFAULTS: dict[str, dict[str, float]] = {
    "algebra-check": {"identity": 1e-12},
    "isometry": {"floor": 0.02, "band_multiplier": 5.0},
    "ito-verify": {"hull": 1e-8},
    "bsde-solve": {"tol": 1e-6, "existence": 1e-7},
    "accept-all": {},
}


@dataclass
class ExperimentConfig:
    """Subcommand, shared numeric parameters and a problem payload."""

    subcommand: str
    seed: int = 0
    steps: int = 64
    paths: int = 1000
    selections: int = 16
    horizon: float = 1.0
    tolerances: dict = field(default_factory=dict)
    problem: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.subcommand in PROBLEM_DEFAULTS:
            self.problem = {**PROBLEM_DEFAULTS[self.subcommand], **self.problem}
            self.tolerances = {**TOLERANCE_DEFAULTS[self.subcommand], **self.tolerances}

    def validate(self, source: str = "<config>", text: Optional[str] = None) -> "ExperimentConfig":
        def fail(key: str, msg: str):
            raise ConfigError(f"{source}{_line_of(text, key)}: field '{key}': {msg}")

        if self.schema_version != SCHEMA_VERSION:
            fail("schema_version", f"expected {SCHEMA_VERSION}, got {self.schema_version!r}")
        if self.subcommand not in SUBCOMMANDS:
            fail("subcommand", f"must be one of {', '.join(SUBCOMMANDS)}")
        for key in ("seed", "steps", "paths", "selections"):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool):
                fail(key, "must be an integer")
            if key != "seed" and v < 1:
                fail(key, "must be >= 1")
        if not _is_number(self.horizon) or not self.horizon > 0:
            fail("horizon", "must be a positive number")
        allowed_tol = TOLERANCE_DEFAULTS[self.subcommand]
        for key, v in self.tolerances.items():
            if key not in allowed_tol:
                fail(key, f"unknown tolerance for {self.subcommand}")
            if not _is_number(v) or not (v > 0 and math.isfinite(v)):
                fail(key, "tolerances must be finite and > 0")
        allowed = PROBLEM_DEFAULTS[self.subcommand]
        for key in self.problem:
            if key not in allowed:
                fail(key, f"unknown problem field for {self.subcommand}")
        _validate_problem(self, fail)
        return self

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be an object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"{source}{_line_of(text, key)}: unknown field '{key}'")
        if "schema_version" not in data:
            raise ConfigError(f"{source}: missing field 'schema_version'")
        if "subcommand" not in data:
            raise ConfigError(f"{source}: missing field 'subcommand'")
        for key in ("tolerances", "problem"):
            if key in data and not isinstance(data[key], dict):
                raise ConfigError(f"{source}{_line_of(text, key)}: field '{key}' must be an object")
        if data["subcommand"] not in SUBCOMMANDS:
            raise ConfigError(f"{source}{_line_of(text, 'subcommand')}: unknown subcommand {data['subcommand']!r}")
        return cls(**data).validate(source, text)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:12]


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _line_of(text: Optional[str], key: str) -> str:
    if not text:
        return ""
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return f":{i}"
    return ""


def _validate_problem(cfg: ExperimentConfig, fail) -> None:
    from .convex import Interval, parse_set
    from .selections import RECIPES

    p = cfg.problem
    if "recipe" in p and p["recipe"] not in RECIPES:
        fail("recipe", f"must be one of {', '.join(RECIPES)}")
    if cfg.subcommand == "algebra-check":
        if not isinstance(p["trials"], int) or p["trials"] < 1:
            fail("trials", "must be an integer >= 1")
        if p["box_trials"] is not None and (not isinstance(p["box_trials"], int) or p["box_trials"] < 0):
            fail("box_trials", "must be an integer >= 0")
    elif cfg.subcommand == "isometry":
        try:
            if not isinstance(parse_set(p["set"]), Interval):
                fail("set", "must be an interval [lo,hi]")
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            fail("set", str(exc))
    elif cfg.subcommand == "ito-verify":
        from .ito import get_transform

        try:
            get_transform(p["phi"])
        except ValueError as exc:
            fail("phi", str(exc))
        for key in ("f", "g"):
            try:
                if not isinstance(parse_set(p[key]), Interval):
                    fail(key, "must be an interval [lo,hi]")
            except ConfigError:
                raise
            except (ValueError, TypeError) as exc:
                fail(key, str(exc))
        if not _is_number(p["x0"]):
            fail("x0", "must be a number")
    elif cfg.subcommand == "bsde-solve":
        from .bsde import DRIVERS, TerminalCondition

        if not isinstance(p["xi"], dict):
            fail("xi", "must be an object")
        try:
            TerminalCondition(**p["xi"])
        except (TypeError, ValueError) as exc:
            fail("xi", str(exc))
        d = p["driver"]
        if not isinstance(d, dict) or d.get("name") not in DRIVERS:
            fail("driver", f"needs a 'name' among {sorted(DRIVERS)}")
        try:
            _make_driver(d)
        except (TypeError, ValueError) as exc:
            fail("driver", str(exc))
        for key in ("degree", "max_iter", "write_paths"):
            if not isinstance(p[key], int) or p[key] < (0 if key == "degree" else 1):
                fail(key, "must be a non-negative integer" if key == "degree" else "must be an integer >= 1")
        if not _is_number(p["ridge"]) or not p["ridge"] > 0:
            fail("ridge", "must be > 0")
        if p["scheme"] not in ("one-step", "multi-step"):
            fail("scheme", "must be 'one-step' or 'multi-step'")
    elif cfg.subcommand == "accept-all":
        if p["scale"] not in ("full", "quick"):
            fail("scale", "must be 'full' or 'quick'")
        only = p["only"]
        if only is not None and (not isinstance(only, list) or any(not isinstance(i, int) or not 1 <= i <= 11
                                                                    for i in only)):
            fail("only", "must be a list of criterion numbers 1..11")


def _make_driver(spec: dict):
    from .bsde import make_driver

    params = {k: v for k, v in spec.items() if k not in ("name", "lipschitz")}
    drv = make_driver(spec["name"], **params)
    declared = spec.get("lipschitz")
    if declared is not None:
        if not _is_number(declared) or declared < drv.lipschitz:
            raise ValueError(f"declared lipschitz {declared!r} is below the driver's constant {drv.lipschitz}")
        # the computed constant drives the audit; the declared one feeds the envelopes
        object.__setattr__(drv, "declared_lipschitz", float(declared))
    return drv


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")


def _run_algebra(cfg: ExperimentConfig, out: Path, echo) -> int:
    from .properties import algebra_suite, write_properties

    p = cfg.problem
    box = p["box_trials"] if p["box_trials"] is not None else max(p["trials"] // 10, 1)
    res = algebra_suite(p["trials"], box, cfg.seed, cfg.tolerances["identity"])
    write_properties(out / "algebra.csv", res)
    failed = [r.name for r in res if not r.passed]
    for r in res:
        echo(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: max_error={r.max_error:.3g}")
    _write_json(out / "summary.json", {"verdict": "fail" if failed else "pass", "failing": failed})
    return EXIT_FAIL if failed else EXIT_PASS


def _bundle(cfg: ExperimentConfig):
    from .stochastic import TimeGrid, generate_brownian

    return generate_brownian(TimeGrid(cfg.horizon, cfg.steps), cfg.paths, seed=cfg.seed)


def _run_isometry(cfg: ExperimentConfig, out: Path, echo) -> int:
    import csv

    from .convex import parse_set
    from .integrals import REPORT_HEADER, setvalued_isometry_check
    from .selections import SetValuedProcess

    f = SetValuedProcess.constant(parse_set(cfg.problem["set"]))
    rep = setvalued_isometry_check(f, _bundle(cfg), cfg.selections, cfg.problem["recipe"], cfg.seed)
    floor, k = cfg.tolerances["floor"], cfg.tolerances["band_multiplier"]
    ok = rep.passed(floor, k)
    with open(out / "isometry.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        w.writerows(rep.rows(cfg.steps))
    echo(f"[{'PASS' if ok else 'FAIL'}] isometry: E[I^2] hull={rep.lhs}, E[int f^2] hull={rep.rhs}, "
         f"distance={rep.distance:.4g} (tolerance {rep.tolerance(floor, k):.4g}); mean hull={rep.mean_hull}")
    _write_json(out / "summary.json", {"verdict": "pass" if ok else "fail", "distance": rep.distance,
                                       "mean_distance": rep.mean_distance})
    return EXIT_PASS if ok else EXIT_FAIL


def _run_ito(cfg: ExperimentConfig, out: Path, echo) -> int:
    from .convex import parse_set
    from .ito import SetItoProcess, get_transform, verify_ito_formula
    from .selections import SetValuedProcess

    p = cfg.problem
    phi = get_transform(p["phi"])
    proc = SetItoProcess(float(p["x0"]), SetValuedProcess.constant(parse_set(p["f"])),
                         SetValuedProcess.constant(parse_set(p["g"])))
    rep = verify_ito_formula(phi, proc, _bundle(cfg), cfg.selections, p["recipe"], cfg.seed, cfg.tolerances["hull"])
    rep.write_csv(out / "ito_report.csv")
    tag = "PASS" if rep.passed else "FAIL"
    note = "" if rep.calibrated else " (uncalibrated transform)"
    echo(f"[{tag}] ito-verify {phi.name}: distance={rep.distance:.4g} threshold={rep.threshold:.4g}{note}")
    _write_json(out / "summary.json", {"verdict": tag.lower(), "distance": rep.distance, "threshold": rep.threshold,
                                       "calibrated": rep.calibrated})
    return EXIT_PASS if rep.passed else EXIT_FAIL


def _run_bsde(cfg: ExperimentConfig, out: Path, echo) -> int:
    import csv

    from .bsde import DiscreteFiltration, SVBSDEProblem, TerminalCondition, solve_svbsde

    p = cfg.problem
    bundle = _bundle(cfg)
    drv = _make_driver(p["driver"])
    prob = SVBSDEProblem(TerminalCondition(**p["xi"]), drv, cfg.horizon)
    filt = DiscreteFiltration(bundle, p["degree"], p["ridge"])
    rep = solve_svbsde(prob, bundle, filt, p["max_iter"], cfg.tolerances["tol"],
                       existence_tol=cfg.tolerances["existence"], keep_iterates=True, scheme=p["scheme"])
    declared = getattr(drv, "declared_lipschitz", None)
    if declared is not None:
        rep.lipschitz = declared
    rep.write_csv(out / "picard_report.csv")
    rep.write_solution(out / "solution.csv", p["write_paths"])
    diag = [("max_residual", rep.max_residual), ("martingale_defect", rep.martingale_defect),
            ("telescoping_violation", rep.telescoping if rep.telescoping is not None else 0.0)]
    with open(out / "diagnostics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in diag:
            w.writerow([k, repr(float(v))])
        for i, r in enumerate(rep.residual):
            w.writerow([f"residual_node_{i}", repr(float(r))])
    echo(f"[{rep.verdict.upper()}] bsde-solve: iterations={rep.iterations} u_last={rep.u[-1]:.3g} "
         f"v_last={rep.v[-1]:.3g} max_residual={rep.max_residual:.3g}")
    for flag in rep.flags:
        echo(f"  note: {flag}")
    _write_json(out / "summary.json", {"verdict": rep.verdict, "iterations": rep.iterations, "flags": rep.flags,
                                       **{k: float(v) for k, v in diag}})
    if rep.verdict == "converged":
        return EXIT_PASS
    return EXIT_INCONCLUSIVE if rep.verdict == "max-iter" else EXIT_FAIL


def _run_accept(cfg: ExperimentConfig, out: Path, echo) -> int:
    from .acceptance import run_suite

    only = cfg.problem["only"]
    results = run_suite(out, cfg.seed, cfg.problem["scale"], only, echo=echo)
    if any(r.verdict == "FAIL" or not r.within_time for r in results):
        return EXIT_FAIL
    if any(r.verdict == "INCONCLUSIVE" for r in results):
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


RUNNERS = {"algebra-check": _run_algebra, "isometry": _run_isometry, "ito-verify": _run_ito,
           "bsde-solve": _run_bsde, "accept-all": _run_accept}


def run(cfg: ExperimentConfig, out_root: Path, echo=print) -> tuple[int, Path]:
    """Execute ``cfg`` and place its artifacts in a content-addressed directory.

    Work happens in a staging directory that is renamed into place at the
    end.  If the target already exists (same config), it is left untouched.
    """
    cfg.validate()
    out_root.mkdir(parents=True, exist_ok=True)
    target = out_root / f"{cfg.subcommand}-{cfg.digest}"
    stage = Path(tempfile.mkdtemp(prefix=".stage-", dir=out_root))
    try:
        (stage / "config.json").write_text(cfg.to_json())
        code = RUNNERS[cfg.subcommand](cfg, stage, echo)
        if target.exists():
            echo(f"outputs for this config already exist at {target}; left unchanged")
        else:
            stage.rename(target)
    finally:
        if stage.exists():
            shutil.rmtree(stage)
    return code, target


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svito", description="Set-valued stochastic calculus experiments.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(p, numeric=True):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default="runs", help="output root (default: runs)")
        p.add_argument("--config", help="JSON experiment config; explicit flags override it")
        if numeric:
            p.add_argument("--steps", type=int, default=None)
            p.add_argument("--paths", type=int, default=None)
            p.add_argument("--selections", type=int, default=None)
            p.add_argument("--horizon", type=float, default=None)

    p = sub.add_parser("algebra-check", help="randomised Hukuhara/Minkowski identity suite")
    common(p, numeric=False)
    p.add_argument("--trials", type=int, default=None, help="interval triples (boxes: trials/10)")
    p.add_argument("--box-trials", type=int, default=None)

    p = sub.add_parser("isometry", help="set-valued Itô isometry for a constant interval integrand")
    common(p)
    p.add_argument("--set", dest="set_", default=None, help='interval literal, e.g. "[0,1]"')
    p.add_argument("--recipe", default=None, help="selection recipe: extreme | support | mix")

    p = sub.add_parser("ito-verify", help="compare both sides of the set-valued Itô formula")
    common(p)
    p.add_argument("--phi", default=None, help="square | identity | time-linear | shift<c>")
    p.add_argument("--x0", type=float, default=None)
    p.add_argument("--f", default=None, help="diffusion interval")
    p.add_argument("--g", default=None, help="drift interval")
    p.add_argument("--recipe", default=None, help="selection recipe: extreme | support | mix")

    p = sub.add_parser("bsde-solve", help="Picard solver for an interval-valued BSDE")
    common(p)

    p = sub.add_parser("accept-all", help="run the acceptance criteria")
    common(p, numeric=False)
    p.add_argument("--scale", choices=("full", "quick"), default=None)
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    return parser


_FLAG_TO_PROBLEM = {"trials": "trials", "box_trials": "box_trials", "set_": "set", "phi": "phi", "x0": "x0",
                    "f": "f", "g": "g", "scale": "scale", "recipe": "recipe"}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        cfg = ExperimentConfig.from_json(text, str(path))
        if cfg.subcommand != args.subcommand:
            raise ConfigError(f"{path}: config is for '{cfg.subcommand}', not '{args.subcommand}'")
    else:
        if args.subcommand == "bsde-solve":
            raise ConfigError("bsde-solve needs --config problem.json")
        cfg = ExperimentConfig(args.subcommand, **_subcommand_defaults(args.subcommand))
    for key in ("seed", "steps", "paths", "selections", "horizon"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    for flag, key in _FLAG_TO_PROBLEM.items():
        v = getattr(args, flag, None)
        if v is not None:
            cfg.problem[key] = v
    if getattr(args, "only", None):
        try:
            cfg.problem["only"] = [int(x) for x in args.only.split(",")]
        except ValueError:
            raise ConfigError("--only expects comma-separated integers") from None
    return cfg.validate("<arguments>")


def _subcommand_defaults(sub: str) -> dict:
    if sub in ("isometry", "ito-verify"):
        return {"steps": 256, "paths": 10_000, "selections": 8 if sub == "ito-verify" else 16}
    return {}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"svito: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code, target = run(cfg, Path(args.out))
    print(f"outputs: {target}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
