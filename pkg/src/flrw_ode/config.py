"""Scenario files.

A scenario file is YAML::

    cosmology: {n: 3, sigma: 0.0, a0: 1.0, a1: 0.5}   # or {n: 2, H: 0.3} for de Sitter
    nonlinearity: {lambda: 1.0, p: 3.0, kind: vector}  # kind: vector | scalar
    initial: {Y0: [0.1, 0, 0], Y1: [0, 0.1, 0]}
    t_end: 5.0
    solver: {method: rk, rtol: 1e-10, atol: 1e-10, grid: 1001,
             blow_threshold: 1e8, frame: Y}            # frame: Y | X | both
    constants: {C0: 1.0, C: 1.0, q_star: .inf}
    sweep: {lambda: [..], p: [..], Y0_scale: [..], Y1_scale: [..],
            Y0_dir: [..], Y1_dir: [..]}
    orbit: {G: .., M: .., R: .., T: .., H: ..}         # H in km/s/Mpc

Only ``cosmology`` is required for ``classify``; ``integrate`` and ``sweep``
also need ``nonlinearity``, ``initial`` (or ``sweep``) and ``t_end``.
Numbers may be written in decimal or scientific notation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from .cosmology import CosmologyParams
from .desitter import OrbitConfig
from .dynamics import DEFAULT_BLOW_THRESHOLD, DEFAULT_GRID, Scenario
from .nonlinearity import NonlinearityKind, NonlinearitySpec

SOLVERS = ("rk", "picard", "both")
FRAMES = ("Y", "X", "both")


class ConfigError(ValueError):
    """Invalid scenario file; ``path`` names the field, ``line`` is 1-based."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        where = path or "<root>"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def _line_index(node, prefix="", out=None) -> dict:
    out = {} if out is None else out
    out.setdefault(prefix, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = f"{prefix}.{key.value}" if prefix else str(key.value)
            out[path] = key.start_mark.line + 1
            _line_index(value, path, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _line_index(item, f"{prefix}[{i}]", out)
    return out


@dataclass
class _Reader:
    data: dict
    lines: dict

    def fail(self, path, message):
        raise ConfigError(message, path, self.lines.get(path))

    def section(self, path, required=True):
        value = self.data.get(path)
        if value is None:
            if required:
                self.fail(path, "missing required section")
            return None
        if not isinstance(value, dict):
            self.fail(path, "expected a mapping")
        return value

    def number(self, sec, name, path, default=None, required=True):
        full = f"{path}.{name}" if path else name
        if name not in sec or sec[name] is None:
            if default is not None or not required:
                return default
            self.fail(full, "missing required number")
        raw = sec[name]
        if isinstance(raw, bool):
            self.fail(full, f"expected a number, got {raw!r}")
        try:
            # YAML 1.1 reads "1e-10" as a string
            return float(raw)
        except (TypeError, ValueError):
            self.fail(full, f"expected a number, got {raw!r}")

    def vector(self, sec, name, path, n=None):
        full = f"{path}.{name}" if path else name
        raw = sec.get(name)
        if raw is None:
            self.fail(full, "missing required vector")
        if not isinstance(raw, list):
            raw = [raw]
        try:
            vec = tuple(float(v) for v in raw)
        except (TypeError, ValueError):
            self.fail(full, f"expected a list of numbers, got {raw!r}")
        if n is not None and len(vec) != n:
            self.fail(full, f"expected {n} components, got {len(vec)}")
        return vec

    def numbers(self, sec, name, path, default):
        if name not in sec:
            return default
        raw = sec[name]
        if not isinstance(raw, list) or not raw:
            self.fail(f"{path}.{name}", "expected a nonempty list")
        try:
            return tuple(float(v) for v in raw)
        except (TypeError, ValueError):
            self.fail(f"{path}.{name}", f"expected a list of numbers, got {raw!r}")


@dataclass(frozen=True)
class SweepAxes:
    lam: tuple = (1.0,)
    p: tuple = (3.0,)
    Y0_scale: tuple = (1.0,)
    Y1_scale: tuple = (0.0,)
    Y0_dir: tuple | None = None
    Y1_dir: tuple | None = None


@dataclass(frozen=True)
class ScenarioFile:
    cosmology: CosmologyParams
    nonlinearity: NonlinearitySpec | None = None
    Y0: tuple | None = None
    Y1: tuple | None = None
    t_end: float | None = None
    solver: str = "rk"
    frame: str = "Y"
    rtol: float = 1e-10
    atol: float = 1e-10
    grid: int = DEFAULT_GRID
    blow_threshold: float = DEFAULT_BLOW_THRESHOLD
    constants: tuple = (1.0, 1.0)
    q_star: float = math.inf
    sweep: SweepAxes | None = None
    orbit: OrbitConfig = field(default_factory=OrbitConfig)
    csv_path: str | None = None
    report_path: str | None = None

    def scenario(self, **overrides) -> Scenario:
        if self.nonlinearity is None or self.Y0 is None or self.t_end is None:
            raise ConfigError("integration needs nonlinearity, initial and t_end")
        kw = dict(cosmology=self.cosmology, nonlinearity=self.nonlinearity, Y0=self.Y0,
                  Y1=self.Y1, t_end=self.t_end, rtol=self.rtol, atol=self.atol,
                  blow_threshold=self.blow_threshold, n_out=self.grid)
        kw.update(overrides)
        return Scenario(**kw)


def parse(text: str) -> ScenarioFile:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(str(exc).splitlines()[0], "", mark.line + 1 if mark else None) from None
    if not isinstance(data, dict):
        raise ConfigError("scenario file must be a mapping")
    r = _Reader(data, _line_index(node) if node is not None else {})

    sec = r.section("cosmology")
    n = r.number(sec, "n", "cosmology")
    if "H" in sec:
        cos_kw = dict(n=n, sigma=-1.0, a0=1.0, a1=r.number(sec, "H", "cosmology"))
    else:
        cos_kw = dict(n=n, sigma=r.number(sec, "sigma", "cosmology"),
                      a0=r.number(sec, "a0", "cosmology", default=1.0),
                      a1=r.number(sec, "a1", "cosmology"))
    try:
        cos = CosmologyParams(**cos_kw)
    except ValueError as exc:
        r.fail("cosmology", str(exc))
    n = cos.n
    kw: dict = {"cosmology": cos}

    sec = r.section("nonlinearity", required=False)
    if sec is not None:
        kind = sec.get("kind", "vector")
        try:
            kind = NonlinearityKind(kind)
        except ValueError:
            r.fail("nonlinearity.kind", f"expected 'vector' or 'scalar', got {kind!r}")
        if kind is NonlinearityKind.POWER_SCALAR and n > 1:
            r.fail("nonlinearity.kind", "the scalar nonlinearity is only defined for n = 1")
        kw["nonlinearity"] = NonlinearitySpec(r.number(sec, "lambda", "nonlinearity"),
                                              r.number(sec, "p", "nonlinearity"), kind)

    sec = r.section("initial", required=False)
    if sec is not None:
        kw["Y0"] = r.vector(sec, "Y0", "initial", n)
        kw["Y1"] = r.vector(sec, "Y1", "initial", n)

    if "t_end" in data:
        t_end = r.number(data, "t_end", "")
        if not t_end > 0:
            r.fail("t_end", "must be positive")
        kw["t_end"] = t_end

    sec = r.section("solver", required=False) or {}
    method = sec.get("method", "rk")
    if method not in SOLVERS:
        r.fail("solver.method", f"expected one of {SOLVERS}, got {method!r}")
    frame = str(sec.get("frame", "Y"))
    if frame not in FRAMES:
        r.fail("solver.frame", f"expected one of {FRAMES}, got {frame!r}")
    kw.update(solver=method, frame=frame,
              rtol=r.number(sec, "rtol", "solver", default=1e-10),
              atol=r.number(sec, "atol", "solver", default=1e-10),
              blow_threshold=r.number(sec, "blow_threshold", "solver", default=DEFAULT_BLOW_THRESHOLD))
    grid = r.number(sec, "grid", "solver", default=float(DEFAULT_GRID))
    if grid != int(grid) or grid < 5:
        r.fail("solver.grid", "expected an integer >= 5")
    kw["grid"] = int(grid)

    sec = r.section("constants", required=False) or {}
    kw["constants"] = (r.number(sec, "C0", "constants", default=1.0),
                       r.number(sec, "C", "constants", default=1.0))
    kw["q_star"] = r.number(sec, "q_star", "constants", default=math.inf)

    sec = r.section("sweep", required=False)
    if sec is not None:
        axes = SweepAxes(
            lam=r.numbers(sec, "lambda", "sweep", SweepAxes.lam),
            p=r.numbers(sec, "p", "sweep", SweepAxes.p),
            Y0_scale=r.numbers(sec, "Y0_scale", "sweep", SweepAxes.Y0_scale),
            Y1_scale=r.numbers(sec, "Y1_scale", "sweep", SweepAxes.Y1_scale),
            Y0_dir=r.vector(sec, "Y0_dir", "sweep", n) if "Y0_dir" in sec else None,
            Y1_dir=r.vector(sec, "Y1_dir", "sweep", n) if "Y1_dir" in sec else None,
        )
        kw["sweep"] = axes

    sec = r.section("orbit", required=False)
    if sec is not None:
        d = OrbitConfig()
        kw["orbit"] = OrbitConfig(
            G=r.number(sec, "G", "orbit", default=d.G), M=r.number(sec, "M", "orbit", default=d.M),
            R=r.number(sec, "R", "orbit", default=d.R), T=r.number(sec, "T", "orbit", default=d.T),
            H_km_s_mpc=r.number(sec, "H", "orbit", default=d.H_km_s_mpc),
            mpc_km=r.number(sec, "mpc_km", "orbit", default=d.mpc_km),
        )

    sec = r.section("output", required=False) or {}
    kw["csv_path"] = sec.get("csv")
    kw["report_path"] = sec.get("report")
    return ScenarioFile(**kw)


def load(path: str) -> ScenarioFile:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
