"""Scenario files, shipped presets, trajectory CSV output and batch runs.

A scenario is a JSON document. Every key has a default except the beacon
positions; :func:`scenario_to_dict` writes the fully resolved form, and
``load_scenario(write_scenario(s)) == s``.
"""

from __future__ import annotations

import fnmatch
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from fwguide import analysis
from fwguide.errors import ConfigError, ConfigParseError, PhysicsError, SchemaError
from fwguide.laws import ControlLaw, AngleSignal, NoiseModel
from fwguide.world import (
    DEFAULT_DT,
    DEFAULT_GUARD,
    DEFAULT_STRIDE,
    BeaconField,
    MotionProfile,
    Trajectory,
    simulate,
)

OUTPUT_ENV = "FWGUIDE_OUT"
DEFAULT_OUTPUT = "runs"

EXIT_PASS = 0
EXIT_CERTIFICATE = 2
EXIT_COLLISION = 3
EXIT_CONFIG = 4

INIT_MODES = ("explicit", "box", "ball")


@dataclass(frozen=True)
class InitialCondition:
    """``explicit`` uses ``p``; ``box`` draws uniformly from ``[low, high]^d``;
    ``ball`` draws uniformly from ``B_R`` around the optimum. ``v`` is the
    double-integrator start velocity (empty means rest)."""

    mode: str = "box"
    p: tuple[float, ...] = ()
    v: tuple[float, ...] = ()
    low: float = -3.0
    high: float = 3.0


@dataclass(frozen=True)
class Scenario:
    name: str
    beacons: BeaconField
    law: ControlLaw = field(default_factory=ControlLaw)
    agent: str = "single"
    noise: NoiseModel = field(default_factory=NoiseModel)
    initial: InitialCondition = field(default_factory=InitialCondition)
    dt: float = DEFAULT_DT
    horizon: float = 10.0
    stride: int = DEFAULT_STRIDE
    seed: int = 0
    guard: float = DEFAULT_GUARD
    ball_margin: float = 0.25
    tol: float = 1e-3
    check_after: float = 0.0

    @property
    def dim(self) -> int:
        return self.beacons.dim

    def initial_position(self) -> np.ndarray:
        """Start position; random modes draw from a PCG64 stream seeded by ``seed``."""
        d = self.dim
        init = self.initial
        if init.mode == "explicit":
            return np.asarray(init.p, dtype=float)
        rng = np.random.Generator(np.random.PCG64(self.seed))
        if init.mode == "box":
            return rng.uniform(init.low, init.high, size=d)
        R = self.beacons.ball_radius(self.ball_margin)
        direction = rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
        return self.beacons.optimum + R * rng.uniform() ** (1.0 / d) * direction

    def initial_velocity(self) -> np.ndarray | None:
        if self.agent != "double":
            return None
        if self.initial.v:
            return np.asarray(self.initial.v, dtype=float)
        return np.zeros(self.dim)

    def validate(self) -> None:
        """Physics checks; raises :class:`PhysicsError`."""
        self.beacons.validate()
        d = self.dim
        if self.agent != self.law.model:
            raise PhysicsError(
                f"law {self.law.kind!r} drives a {self.law.model}-integrator agent, "
                f"but the scenario agent is {self.agent!r}"
            )
        if self.noise.angles and len(self.noise.angles) != self.beacons.n:
            raise PhysicsError("the noise model needs one angle signal per beacon")
        motion = self.beacons.motion
        if self.law.kind == "smc_si":
            _check_bound(self.law.beta, motion.eta, motion.speed_bound(d), "velocity")
        if self.law.kind == "smc_di":
            _check_bound(self.law.beta, motion.eta, motion.accel_bound(d), "acceleration")
        if self.initial.mode == "explicit" and len(self.initial.p) != d:
            raise PhysicsError("explicit initial position has the wrong dimension")
        if self.initial.v and len(self.initial.v) != d:
            raise PhysicsError("initial velocity has the wrong dimension")
        if self.initial.mode == "ball" and self.beacons.ball_radius(self.ball_margin) <= 0:
            raise PhysicsError("ball_margin must be smaller than the smallest optimum-beacon distance")
        p0 = self.initial_position()
        gap = float(np.min(np.linalg.norm(self.beacons.p0 - p0, axis=1)))
        if gap < self.guard:
            raise PhysicsError(f"initial position is within the collision guard of a beacon ({gap:.3g})")

    def simulate(self) -> Trajectory:
        return simulate(
            self.beacons, self.law, self.initial_position(), self.initial_velocity(),
            noise=self.noise, dt=self.dt, horizon=self.horizon, stride=self.stride,
            guard=self.guard,
        )

    def certify(self, traj: Trajectory) -> analysis.CertificateReport:
        return analysis.certify(traj, self.beacons, self.law, self.noise, tol=self.tol,
                                after=self.check_after, margin=self.ball_margin)


def _check_bound(beta, eta, actual, what):
    if actual > eta + 1e-12:
        raise PhysicsError(f"declared bound eta={eta:g} is below the true beacon {what} bound {actual:g}")
    if not beta > eta:
        raise PhysicsError(f"sliding-mode gain beta={beta:g} must exceed eta={eta:g}")


# ---------------------------------------------------------------------------
# (de)serialisation

_TOP_KEYS = {"name", "dimension", "beacons", "agent", "law", "noise", "initial", "dt", "horizon",
             "stride", "seed", "guard", "certificate"}


def _floats(value, key):
    try:
        return tuple(float(x) for x in value)
    except (TypeError, ValueError):
        raise SchemaError(f"{key} must be a list of numbers") from None


def _number(value, key, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{key} must be a number")
    if kind is int:
        if float(value) != int(value):
            raise SchemaError(f"{key} must be an integer")
        return int(value)
    return float(value)


def _section(doc, key, allowed):
    sec = doc.get(key, {})
    if not isinstance(sec, dict):
        raise SchemaError(f"{key} must be an object")
    unknown = set(sec) - set(allowed)
    if unknown:
        raise SchemaError(f"unknown keys in {key}: {sorted(unknown)}")
    return sec


def _dataclass_from(cls, sec, key, converters):
    kwargs = {}
    for name, conv in converters.items():
        if name in sec:
            kwargs[name] = conv(sec[name], f"{key}.{name}")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise SchemaError(f"{key}: {exc}") from None


def _string(value, key):
    if not isinstance(value, str):
        raise SchemaError(f"{key} must be a string")
    return value


def scenario_from_dict(doc: dict) -> Scenario:
    """Build a :class:`Scenario` from a parsed document (schema checks only)."""
    if not isinstance(doc, dict):
        raise SchemaError("scenario document must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise SchemaError(f"unknown top-level keys: {sorted(unknown)}")
    if "name" not in doc:
        raise SchemaError("missing key: name")
    name = _string(doc["name"], "name")

    bsec = _section(doc, "beacons", ("positions", "weights", "motion"))
    if "positions" not in bsec:
        raise SchemaError("missing key: beacons.positions")
    positions = bsec["positions"]
    if not isinstance(positions, list) or not positions:
        raise SchemaError("beacons.positions must be a non-empty list")
    positions = tuple(_floats(p, "beacons.positions[]") for p in positions)
    dim = len(positions[0])
    if "dimension" in doc and _number(doc["dimension"], "dimension", int) != dim:
        raise SchemaError("dimension does not match the beacon coordinates")
    weights = _floats(bsec.get("weights", [1.0] * len(positions)), "beacons.weights")

    motion_keys = {f.name for f in fields(MotionProfile)}
    msec = _section(bsec, "motion", motion_keys)
    motion = _dataclass_from(MotionProfile, msec, "beacons.motion", {
        "kind": _string, "velocity": _floats, "offset": _floats, "amp": _floats,
        "freq": _number, "phase": _floats, "eta": _number,
    })
    beacons = BeaconField(positions=positions, weights=weights, motion=motion)

    lsec = _section(doc, "law", {f.name for f in fields(ControlLaw)})
    law = _dataclass_from(ControlLaw, lsec, "law",
                          {f.name: (_string if f.name == "kind" else _number)
                           for f in fields(ControlLaw)})

    nsec = _section(doc, "noise", ("angles", "axis"))
    angles = []
    for i, a in enumerate(nsec.get("angles", [])):
        asec = _section({"a": a}, "a", ("offset", "amp", "freq"))
        angles.append(_dataclass_from(AngleSignal, asec, f"noise.angles[{i}]",
                                      {"offset": _number, "amp": _number, "freq": _number}))
    noise_kwargs = {"angles": tuple(angles)}
    if "axis" in nsec:
        noise_kwargs["axis"] = _floats(nsec["axis"], "noise.axis")
        if len(noise_kwargs["axis"]) != 3 or not any(noise_kwargs["axis"]):
            raise SchemaError("noise.axis must be a non-zero 3-vector")
    noise = NoiseModel(**noise_kwargs)

    isec = _section(doc, "initial", ("mode", "p", "v", "low", "high"))
    if "p" in isec and "mode" not in isec:
        isec = dict(isec, mode="explicit")
    initial = _dataclass_from(InitialCondition, isec, "initial", {
        "mode": _string, "p": _floats, "v": _floats, "low": _number, "high": _number,
    })
    if initial.mode not in INIT_MODES:
        raise SchemaError(f"initial.mode must be one of {INIT_MODES}")
    if initial.mode == "explicit" and not initial.p:
        raise SchemaError("initial.p is required for explicit initial positions")
    if initial.mode == "box" and not initial.low < initial.high:
        raise SchemaError("initial.low must be below initial.high")

    csec = _section(doc, "certificate", ("tol", "after", "ball_margin"))
    agent = _string(doc.get("agent", law.model), "agent")
    if agent not in ("single", "double"):
        raise SchemaError("agent must be 'single' or 'double'")

    kwargs = dict(
        name=name, beacons=beacons, law=law, agent=agent, noise=noise, initial=initial,
    )
    for key, sec, attr, conv in (
        ("dt", doc, "dt", float),
        ("horizon", doc, "horizon", float),
        ("stride", doc, "stride", int),
        ("certificate.tol", csec, "tol", float),
        ("certificate.after", csec, "after", float),
        ("certificate.ball_margin", csec, "ball_margin", float),
    ):
        if attr in sec:
            target = "check_after" if attr == "after" else attr
            kwargs[target] = _number(sec[attr], key, conv)
    if "seed" in doc:
        kwargs["seed"] = _number(doc["seed"], "seed", int)
    if "guard" in doc:
        kwargs["guard"] = _number(doc["guard"], "guard")
    sc = Scenario(**kwargs)
    if sc.dt <= 0 or sc.horizon <= 0 or sc.stride < 1:
        raise SchemaError("dt, horizon and stride must be positive")
    if sc.guard <= 0 or sc.tol < 0 or sc.ball_margin <= 0:
        raise SchemaError("guard and ball_margin must be positive, tol non-negative")
    if sc.seed < 0:
        raise SchemaError("seed must be non-negative")
    return sc


def scenario_to_dict(sc: Scenario) -> dict:
    """Fully resolved document (all defaults written out)."""
    b = sc.beacons
    return {
        "name": sc.name,
        "dimension": sc.dim,
        "beacons": {
            "positions": [list(p) for p in b.positions],
            "weights": list(b.weights),
            "motion": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(b.motion).items()},
        },
        "agent": sc.agent,
        "law": asdict(sc.law),
        "noise": {
            "angles": [asdict(a) for a in sc.noise.angles],
            "axis": list(sc.noise.axis),
        },
        "initial": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(sc.initial).items()},
        "dt": sc.dt,
        "horizon": sc.horizon,
        "stride": sc.stride,
        "seed": sc.seed,
        "guard": sc.guard,
        "certificate": {"tol": sc.tol, "after": sc.check_after, "ball_margin": sc.ball_margin},
    }


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


def write_scenario(sc: Scenario, path) -> Path:
    path = Path(path)
    path.write_text(dumps_scenario(sc), encoding="utf-8", newline="\n")
    return path


def parse_scenario(text: str, source: str = "<string>", validate: bool = True) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{source}: {exc}") from None
    sc = scenario_from_dict(doc)
    if validate:
        sc.validate()
    return sc


def preset_names() -> list[str]:
    files = resources.files("fwguide") / "presets"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_preset(name: str, validate: bool = True) -> Scenario:
    path = resources.files("fwguide") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_scenario(path.read_text(encoding="utf-8"), f"preset {name}", validate)


def load_scenario(path_or_preset, validate: bool = True) -> Scenario:
    """Load a scenario file, or a shipped preset when no such file exists."""
    path = Path(path_or_preset)
    if path.is_file():
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return parse_scenario(text, str(path), validate)
    if str(path_or_preset) in preset_names():
        return load_preset(str(path_or_preset), validate)
    raise ConfigError(f"no scenario file or preset named {str(path_or_preset)!r}")


def with_overrides(sc: Scenario, dt=None, horizon=None, seed=None) -> Scenario:
    changes = {k: v for k, v in (("dt", dt), ("horizon", horizon), ("seed", seed)) if v is not None}
    return replace(sc, **changes) if changes else sc


# ---------------------------------------------------------------------------
# trajectory CSV


def csv_header(d: int, double: bool, has_beta: bool, has_vhat: bool) -> list[str]:
    cols = ["t"] + [f"p{k}" for k in range(d)]
    if double:
        cols += [f"v{k}" for k in range(d)]
    cols += [f"u{k}" for k in range(d)]
    cols += ["delta_norm", "f", "V", "min_dist"]
    if has_beta:
        cols.append("beta")
    if has_vhat:
        cols += [f"vhat{k}" for k in range(d)]
    return cols


def trajectory_to_csv(traj: Trajectory) -> str:
    """CSV text with shortest round-trip float formatting and LF line endings."""
    d = traj.p.shape[1]
    header = csv_header(d, traj.v is not None, traj.beta is not None, traj.vhat is not None)
    blocks = [traj.t[:, None], traj.p]
    if traj.v is not None:
        blocks.append(traj.v)
    blocks.append(traj.u)
    blocks += [traj.delta_norm[:, None], traj.f[:, None], traj.V[:, None], traj.min_dist[:, None]]
    if traj.beta is not None:
        blocks.append(traj.beta[:, None])
    if traj.vhat is not None:
        blocks.append(traj.vhat)
    table = np.hstack(blocks)
    lines = [",".join(header)]
    lines += [",".join(repr(float(x)) for x in row) for row in table]
    return "\n".join(lines) + "\n"


def write_trajectory_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(trajectory_to_csv(traj))
    return path


def read_trajectory_csv(path, sc: Scenario | None = None) -> Trajectory:
    """Load a trajectory written by :func:`write_trajectory_csv`.

    Controller ``q`` is not part of the file. With a scenario, a run that ended
    early at a guard violation is marked as collided.
    """
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    col = {name: i for i, name in enumerate(header)}
    d = sum(1 for h in header if h.startswith("p") and h[1:].isdigit())

    def block(prefix):
        keys = [f"{prefix}{k}" for k in range(d)]
        if keys[0] not in col:
            return None
        return data[:, [col[k] for k in keys]]

    traj = Trajectory(
        t=data[:, col["t"]], p=block("p"), u=block("u"),
        delta_norm=data[:, col["delta_norm"]], f=data[:, col["f"]], V=data[:, col["V"]],
        min_dist=data[:, col["min_dist"]], v=block("v"),
        beta=data[:, col["beta"]] if "beta" in col else None, vhat=block("vhat"),
    )
    if sc is not None:
        traj.dt = sc.dt
        # runs only stop early at a guard violation
        if traj.t[-1] < sc.horizon - 0.5 * sc.dt:
            traj.collision_time = float(traj.t[-1])
    return traj


# ---------------------------------------------------------------------------
# running


@dataclass
class RunResult:
    name: str
    exit_code: int
    csv_path: Path | None
    report_path: Path | None
    report: dict


def exit_code_for(traj: Trajectory, cert: analysis.CertificateReport) -> int:
    if traj.collided:
        return EXIT_COLLISION
    return EXIT_PASS if cert.passed else EXIT_CERTIFICATE


def build_report(sc: Scenario, traj: Trajectory, cert: analysis.CertificateReport) -> dict:
    report = {
        "scenario": scenario_to_dict(sc),
        "initial_position": [float(x) for x in traj.p[0]],
        "optimum": [float(x) for x in sc.beacons.optimum],
        "samples": len(traj),
        "collision_time": traj.collision_time,
        "certificate": cert.summary(),
        "exit_code": exit_code_for(traj, cert),
    }
    if sc.law.switching:
        every = max(1, len(traj) // 100)
        beta = traj.beta if traj.beta is not None else np.full(len(traj), sc.law.beta)
        report["beta_trace"] = {
            "t": [float(x) for x in traj.t[::every]],
            "beta": [float(x) for x in beta[::every]],
        }
    return report


def run_scenario(sc: Scenario, out_dir=None) -> RunResult:
    """Simulate, certify and (if ``out_dir`` is given) write ``<name>.csv`` and
    ``<name>.report.json``."""
    traj = sc.simulate()
    cert = sc.certify(traj)
    report = build_report(sc, traj, cert)
    csv_path = report_path = None
    if out_dir is not None:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
            csv_path = write_trajectory_csv(traj, out / f"{sc.name}.csv")
            report_path = out / f"{sc.name}.report.json"
            report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                                   encoding="utf-8", newline="\n")
        except OSError as exc:
            raise OSError(f"cannot write results to {out}: {exc}") from exc
    return RunResult(sc.name, report["exit_code"], csv_path, report_path, report)


def check_trajectory(csv_path, sc: Scenario) -> tuple[int, dict]:
    """Re-run the certificate on a stored trajectory."""
    traj = read_trajectory_csv(csv_path, sc)
    cert = sc.certify(traj)
    return exit_code_for(traj, cert), cert.summary()


def resolve_batch(patterns) -> list[str]:
    """Expand preset-name globs and file globs into a sorted list of sources."""
    import glob as _glob

    if isinstance(patterns, str):
        patterns = [patterns]
    found = set()
    names = preset_names()
    for pat in patterns:
        matches = [p for p in _glob.glob(pat) if Path(p).is_file()]
        if matches:
            found.update(matches)
        else:
            found.update(fnmatch.filter(names, pat))
    return sorted(found, key=lambda s: (Path(s).stem, s))


def _run_one(args):
    source, out_dir, overrides = args
    try:
        sc = with_overrides(load_scenario(source), **overrides)
        sc.validate()
    except ConfigError as exc:
        return {"name": Path(source).stem, "exit_code": EXIT_CONFIG, "error": str(exc)}
    res = run_scenario(sc, out_dir)
    cert = res.report["certificate"]
    return {
        "name": res.name,
        "exit_code": res.exit_code,
        "passed": cert["passed"],
        "final_delta": cert["final_delta"],
        "csv": str(res.csv_path) if res.csv_path else None,
    }


def batch(patterns, out_dir=None, jobs: int = 1, **overrides) -> list[dict]:
    """Run every matching scenario independently; rows are ordered by name."""
    sources = resolve_batch(patterns)
    work = [(s, out_dir, overrides) for s in sources]
    if jobs <= 1 or len(work) <= 1:
        rows = [_run_one(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_one, work))
    return sorted(rows, key=lambda r: r["name"])


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT)


def finite(x) -> bool:
    return x is not None and math.isfinite(x)
