"""Run configuration: a single JSON document, validated up front.

Every section has defaults; ``RunConfig.to_dict`` materializes all of them
so a manifest alone reproduces a run.
"""

from dataclasses import dataclass, field, asdict, fields, replace
import hashlib
import json
import math
import os
from typing import Optional

import numpy as np

from . import rng
from .errors import ArtifactError, ConfigError
from .grid import ScalarField, make_grid
from .model import MagneticSpec, PotentialSpec, build_potential, evaluate_potential
from .pathint import PathConfig

POTENTIAL_KINDS = ("bumps", "zero", "constant", "file")
EIGEN_METHODS = ("block", "scan")


def _section(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {extra}")
    try:
        return cls(**data)
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class GridConfig:
    dim: int = 2
    lower: object = -0.5
    upper: object = 0.5
    n_nodes: object = 129

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2")
        try:
            self.build()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def build(self):
        return make_grid(self.dim, self.lower, self.upper, self.n_nodes)


@dataclass(frozen=True)
class PotentialConfig:
    kind: str = "bumps"
    bumps_per_axis: int = 16
    weight_low: float = 0.0
    weight_high: float = 1280.0
    sigma: float = 0.25
    offset: float = 0.0
    seed: int = 0
    value: float = 0.0  # kind == "constant"
    path: Optional[str] = None  # kind == "file"
    sha256: Optional[str] = None  # optional checksum of the file

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ConfigError(f"kind must be one of {POTENTIAL_KINDS}")
        if self.kind == "constant" and not (math.isfinite(self.value) and self.value >= 0):
            raise ConfigError("constant value must be finite and >= 0")
        if self.kind == "file" and not self.path:
            raise ConfigError("kind 'file' needs a path")
        if self.kind == "bumps":
            self.spec()

    def spec(self):
        return PotentialSpec(self.bumps_per_axis, self.weight_low, self.weight_high, self.sigma,
                             self.offset, self.seed)

    def build(self, grid, base_dir="."):
        if self.kind == "bumps":
            return build_potential(grid, self.spec())
        if self.kind == "zero":
            return ScalarField(grid, np.zeros(grid.shape))
        if self.kind == "constant":
            return ScalarField(grid, np.full(grid.shape, float(self.value)))
        return self._load(grid, base_dir)

    def _load(self, grid, base_dir):
        from . import llf1

        path = self.path if os.path.isabs(self.path) else os.path.join(base_dir, self.path)
        if not os.path.exists(path):
            raise ArtifactError(f"potential file {path} does not exist")
        with open(path, "rb") as fh:
            data = fh.read()
        digest = hashlib.sha256(data).hexdigest()
        if self.sha256 and digest != self.sha256:
            raise ArtifactError(f"potential file {path} is stale: sha256 {digest} != {self.sha256}")
        try:
            V = llf1.decode(data)
        except ValueError as exc:
            raise ArtifactError(f"{path}: {exc}") from None
        if V.grid != grid:
            raise ConfigError(f"potential file {path} is on {V.grid}, config grid is {grid}")
        return V

    def build_extended(self, grid, pad):
        """V on ``grid`` enlarged by ``pad`` on every side (same spacing).

        Closed-form kinds are evaluated exactly; a file potential is returned
        unchanged (paths clamp to its edge values).
        """
        if self.kind == "file":
            return None
        h = np.array(grid.spacing)
        extra = np.ceil(pad / h).astype(int)
        lo = tuple(np.array(grid.lower) - extra * h)
        hi = tuple(np.array(grid.upper) + extra * h)
        big = make_grid(grid.dim, lo, hi, tuple(np.array(grid.n_nodes) + 2 * extra))
        if self.kind == "bumps":
            # bump centres stay tied to the original box
            vals = evaluate_potential(self.spec(), grid.lower, grid.upper, *big.mesh())
            return ScalarField(big, np.asarray(vals).reshape(big.shape))
        return self.build(big)


@dataclass(frozen=True)
class MagneticConfig:
    bumps_per_axis: int = 8
    b: float = 0.0
    sigma_x: float = 1.0 / math.sqrt(8)
    sigma_y: float = 1.0 / math.sqrt(8)
    seed: int = 1

    def __post_init__(self):
        self.spec()

    def spec(self, b=None):
        return MagneticSpec(self.bumps_per_axis, self.b if b is None else float(b),
                            self.sigma_x, self.sigma_y, self.seed)


@dataclass(frozen=True)
class EigenConfig:
    n_pairs: int = 5
    method: str = "block"
    tol: float = 1e-9
    max_iter: int = 500
    scan: Optional[dict] = None  # {"start", "stop", "step"} for method "scan"
    probe_seed: int = 0

    def __post_init__(self):
        if self.method not in EIGEN_METHODS:
            raise ConfigError(f"method must be one of {EIGEN_METHODS}")
        if self.n_pairs < 1:
            raise ConfigError("n_pairs must be >= 1")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.method == "scan":
            if not isinstance(self.scan, dict) or set(self.scan) != {"start", "stop", "step"}:
                raise ConfigError("method 'scan' needs scan = {start, stop, step}")
            if not (self.scan["step"] > 0 and self.scan["stop"] > self.scan["start"]):
                raise ConfigError("scan needs step > 0 and stop > start")

    def scan_grid(self):
        s = self.scan
        n = int(math.floor((s["stop"] - s["start"]) / s["step"] + 1e-9)) + 1
        return s["start"] + s["step"] * np.arange(n)


def expand_times(spec):
    """t-grid from a list, {"log": [lo, hi, n]} or {"range": [start, stop, step]}."""
    if isinstance(spec, dict):
        if set(spec) == {"log"}:
            lo, hi, n = spec["log"]
            if not (0 < lo < hi and int(n) >= 2):
                raise ConfigError("log t-grid needs 0 < lo < hi and n >= 2")
            return tuple(np.geomspace(lo, hi, int(n)))
        if set(spec) == {"range"}:
            start, stop, step = spec["range"]
            if not (start > 0 and step > 0 and stop >= start):
                raise ConfigError("range t-grid needs start > 0, step > 0, stop >= start")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(start + step * np.arange(n))
        raise ConfigError("t_grid object must have exactly one key, 'log' or 'range'")
    ts = tuple(float(t) for t in np.atleast_1d(spec))
    if not ts:
        raise ConfigError("t_grid is empty")
    return ts


@dataclass(frozen=True)
class PathsConfig:
    n_paths: int = 10000
    dt: float = 1e-4
    t_grid: object = (1e-3, 1e-2)
    seed: int = 0
    bridge_correction: bool = False
    snap_to_dt: bool = True
    points: object = field(default_factory=lambda: {"count": 5, "margin": 0.2})
    lam: Optional[float] = None  # default: eigenvalue of pair ``pair``
    pair: int = 0

    def __post_init__(self):
        self.path_config(0.5)
        if self.lam is not None and not self.lam >= 0:
            raise ConfigError("lam must be >= 0")
        if self.pair < 0:
            raise ConfigError("pair must be >= 0")
        if isinstance(self.points, dict):
            if set(self.points) - {"count", "margin"} or int(self.points.get("count", 0)) < 1:
                raise ConfigError("points object needs count >= 1 (and optional margin)")
            if not 0 <= self.points.get("margin", 0.2) < 0.5:
                raise ConfigError("points margin must be in [0, 0.5)")

    def path_config(self, laplacian_scale, t_grid=None):
        try:
            return PathConfig(int(self.n_paths), float(self.dt),
                              expand_times(self.t_grid if t_grid is None else t_grid),
                              seed=int(self.seed), bridge_correction=bool(self.bridge_correction),
                              laplacian_scale=float(laplacian_scale), snap_to_dt=bool(self.snap_to_dt))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def sample_points(self, grid):
        if not isinstance(self.points, dict):
            pts = np.atleast_2d(np.asarray(self.points, dtype=float))
            if pts.shape[1] != grid.dim:
                raise ConfigError(f"paths.points must have {grid.dim} coordinates each")
            return pts
        return sample_points(grid, int(self.points["count"]), self.points.get("margin", 0.2),
                             self.seed)


def sample_points(grid, count, margin=0.2, seed=0):
    """Deterministic uniform points in the box shrunk by ``margin`` per side."""
    lo = np.array(grid.lower)
    L = np.array(grid.upper) - lo
    u = rng.uniform(seed, rng.STREAM_POINTS, np.arange(count * grid.dim)).reshape(count, grid.dim)
    return lo + L * (margin + (1 - 2 * margin) * u)


@dataclass(frozen=True)
class LocalLandscapeConfig:
    t: float = 1e-3
    laplacian_scale: float = 1.0
    padding: Optional[int] = None
    collar: float = 3.0


@dataclass(frozen=True)
class VerifyConfig:
    n_sigma: float = 3.0
    thm1_slack_h2: float = 10.0
    b_values: Optional[list] = None
    corollary_factor: float = 1.05
    c_d: float = 2.0
    thm3_gating: Optional[bool] = None  # default: gating in 1D only
    example_nodes: int = 257
    example_tol_h2: float = 5.0
    example_times: tuple = (0.05, 0.5, 1.0, 2.0, 5.0)

    def __post_init__(self):
        if self.example_nodes < 5:
            raise ConfigError("example_nodes must be >= 5")
        if self.n_sigma < 0:
            raise ConfigError("n_sigma must be >= 0")


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    laplacian_scale: float = 0.5
    potential: PotentialConfig = field(default_factory=PotentialConfig)
    magnetic: MagneticConfig = field(default_factory=MagneticConfig)
    eigen: EigenConfig = field(default_factory=EigenConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)
    local_landscape: LocalLandscapeConfig = field(default_factory=LocalLandscapeConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    base_dir: str = field(default=".", compare=False)

    SECTIONS = {"grid": GridConfig, "potential": PotentialConfig, "magnetic": MagneticConfig,
                "eigen": EigenConfig, "paths": PathsConfig, "local_landscape": LocalLandscapeConfig,
                "verify": VerifyConfig}

    @classmethod
    def from_dict(cls, data, where="config", base_dir="."):
        if not isinstance(data, dict):
            raise ConfigError(f"{where}: top level must be an object")
        extra = sorted(set(data) - set(cls.SECTIONS) - {"laplacian_scale"})
        if extra:
            raise ConfigError(f"{where}: unknown key(s) {extra}")
        kw = {name: _section(sec, data.get(name), f"{where}: {name}")
              for name, sec in cls.SECTIONS.items()}
        scale = data.get("laplacian_scale", 0.5)
        if not (isinstance(scale, (int, float)) and scale > 0):
            raise ConfigError(f"{where}: laplacian_scale must be a positive number")
        return cls(laplacian_scale=float(scale), base_dir=base_dir, **kw)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data, where=str(path), base_dir=os.path.dirname(os.path.abspath(path)))

    def with_seed(self, seed):
        """Override every seed in the config."""
        seed = int(seed)
        return replace(self, potential=replace(self.potential, seed=seed),
                       magnetic=replace(self.magnetic, seed=seed),
                       paths=replace(self.paths, seed=seed),
                       eigen=replace(self.eigen, probe_seed=seed))

    def to_dict(self):
        out = {name: asdict(getattr(self, name)) for name in self.SECTIONS}
        out["laplacian_scale"] = self.laplacian_scale
        return json.loads(json.dumps(out, default=_jsonable))

    def digest(self):
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def seeds(self):
        return {"potential": self.potential.seed, "magnetic": self.magnetic.seed,
                "paths": self.paths.seed, "probe": self.eigen.probe_seed}


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
