"""Flat dotted-key run configuration: parsing, schema validation, group building.

Format: one `key = value` per line, `#` comments, no sections or includes.
Unknown keys are rejected so configs stay diff-audited.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .experiments import TestFunction
from .schottky import PairingCircle, SchottkyGroup, build_symmetric_schottky


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes"):
        return True
    if s.lower() in ("false", "0", "no"):
        return False
    raise ConfigError(f"expected boolean, got {s!r}")


def _parse_floats(s: str):
    return [float(x) for x in s.split(",") if x.strip()]


# key -> (parser, default); defaults of None mean "required when used"
SCHEMA = {
    "experiment": (str, None),
    "out": (str, "runs/out"),
    "seed": (int, 0),
    "threads": (int, 0),
    "group.kind": (str, "symmetric"),
    "group.rank": (int, 2),
    "group.half_width": (float, 0.15),
    "group.circles": (str, ""),
    "xi.angle": (float, math.pi / 4),
    "bump.center_re": (float, 0.0),
    "bump.center_im": (float, 0.0),
    "bump.radius": (float, 0.45),
    "point.re": (float, 0.1),
    "point.im": (float, 0.0),
    "scan.t_min": (float, 10.0),
    "scan.t_max": (float, 80.0),
    "scan.t_count": (int, 24),
    "scan.t_values": (_parse_floats, []),
    "tol.series": (float, 1e-6),
    "tol.kernel": (float, 1e-9),
    "orbit.depth": (int, 8),
    "delta.max_word_length": (int, 9),
    "count.T": (float, 8.0),
    "geodesics.max_length": (float, 12.0),
    "eisenstein.t": (float, 10.0),
    "eisenstein.s_real": (float, 0.0),
    "average.per_gap": (int, 10),
    "average.use_symmetry": (_parse_bool, False),
    "average.orbit_depth": (int, 8),
    "trace.geodesic_cutoff": (float, 14.0),
    "grid.refine": (float, 1.0),
    "fit.window": (float, 1.0),
}


@dataclass
class RunConfig:
    values: dict
    text: str = ""
    path: str = ""

    @staticmethod
    def parse(text: str, path: str = "") -> "RunConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            parser, _ = SCHEMA[key]
            try:
                values[key] = parser(val)
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
        cfg = RunConfig(values, text, path)
        cfg._validate()
        return cfg

    @staticmethod
    def load(path) -> "RunConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return RunConfig.parse(text, str(path))

    def _validate(self):
        for key in ("tol.series", "tol.kernel"):
            if self.get(key) <= 0:
                raise ConfigError(f"{key} must be positive")
        ts = self.t_grid()
        if len(ts) and np.any(np.diff(ts) <= 0):
            raise ConfigError("t grid must be strictly increasing")
        if self.get("scan.t_min") >= self.get("scan.t_max"):
            raise ConfigError("scan.t_min must be below scan.t_max")
        if self.get("bump.radius") <= 0:
            raise ConfigError("bump.radius must be positive")

    def get(self, key):
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        parser, default = SCHEMA[key]
        if key in self.values:
            return self.values[key]
        if default is None:
            raise ConfigError(f"missing required key {key!r}")
        return default

    def sha256(self) -> str:
        canonical = "\n".join(
            f"{k} = {self.values[k]}" for k in sorted(self.values)
        )
        return hashlib.sha256(canonical.encode()).hexdigest()

    def build_group(self) -> SchottkyGroup:
        kind = self.get("group.kind")
        if kind == "trivial":
            return SchottkyGroup.trivial()
        if kind == "symmetric":
            return build_symmetric_schottky(self.get("group.rank"), self.get("group.half_width"))
        if kind == "circles":
            spec = self.get("group.circles")
            circles = []
            for part in spec.split(";"):
                part = part.strip()
                if not part:
                    continue
                ang, _, rad = part.partition(":")
                circles.append(PairingCircle(float(ang), float(rad)))
            return SchottkyGroup.from_circles(circles)
        raise ConfigError(f"unknown group.kind {kind!r}")

    def bump(self) -> TestFunction:
        c = complex(self.get("bump.center_re"), self.get("bump.center_im"))
        return TestFunction(c, self.get("bump.radius"))

    def xi(self) -> complex:
        return complex(np.exp(1j * self.get("xi.angle")))

    def t_grid(self) -> np.ndarray:
        explicit = self.get("scan.t_values") if "scan.t_values" in self.values else []
        if explicit:
            return np.asarray(explicit, dtype=float)
        return np.geomspace(self.get("scan.t_min"), self.get("scan.t_max"),
                            self.get("scan.t_count"))
