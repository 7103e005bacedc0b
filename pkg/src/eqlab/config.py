"""
Experiment Configuration

`ExperimentConfig` holds every knob of one CLI run. It is built from parsed
command-line flags or from a JSON file whose keys are the field names.
"""

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from .errors import ConfigError

EXPERIMENTS = (
    "equilibria",
    "flow",
    "events",
    "random-mesh",
    "flock-scaling",
    "rate-profile",
    "caustic-sweep",
)
RANDOMIZED = frozenset({"random-mesh", "flock-scaling", "flow"})
THREADS_ENV = "EQLAB_THREADS"
DEFAULT_N = 400

Vector = Tuple[float, ...]


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment run.

    Attributes:
        experiment: One of `EXPERIMENTS`.
        shape: Curve preset or JSON path for planar experiments.
        mesh: Mesh preset or OFF/OBJ path for surface experiments.
        n: Polygon segments, random-chain points or flow polygon vertices; None
            picks `DEFAULT_N`, or 512 vertices for flows.
        mesh_n: Polygon vertices used for N^Delta during flows.
        offset: Mesh offset in [0, 1).
        perturb_offset: Nudge the offset instead of failing on nongeneric meshes.
        kind: Flow kind, csf or eikonal.
        c: Curve-shortening coefficient.
        dt: Flow step; None picks a stable default.
        steps: Flow steps, or sweep samples.
        trials: Monte Carlo trials.
        seed: Base seed, mandatory for randomized experiments.
        delta: Half-width of the random-mesh window.
        delta0: Coarsest step of the flock-scaling ladder.
        rungs: Ladder rungs.
        offsets: Random offsets per rung.
        case: Rate-profile case i, ii, iii or iv.
        t_min: Smallest rate-profile time.
        t_max: Largest rate-profile time.
        points: Rate-profile times.
        direction: Sweep direction; "umbilic" selects the umbilic direction.
        tmax: Last sweep time.
        o_start: Event trajectory start.
        o_end: Event trajectory end.
        kappa_rho: kappa * rho of the random-mesh model.
        exponent: Random-mesh exponent variant reported as primary.
        threads: Worker cap.
        out_dir: Artifact directory.
    """

    experiment: str = "equilibria"
    shape: Optional[str] = None
    mesh: Optional[str] = None
    n: Optional[int] = None
    mesh_n: int = 128
    offset: float = 0.0
    perturb_offset: bool = False
    kind: str = "csf"
    c: float = 1.0
    dt: Optional[float] = None
    steps: int = 200
    trials: int = 100_000
    seed: Optional[int] = None
    delta: float = 1e-3
    delta0: float = 0.2
    rungs: int = 8
    offsets: int = 200
    case: str = "i"
    t_min: float = 1e-4
    t_max: float = 1e-2
    points: int = 12
    direction: Union[str, Vector, None] = None
    tmax: float = 1.9
    o_start: Optional[Vector] = None
    o_end: Optional[Vector] = None
    kappa_rho: float = -0.5
    exponent: str = "n-1"
    threads: Optional[int] = None
    out_dir: str = "runs"

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """Check field domains.

        Raises:
            ConfigError: Naming the first offending field.
        """
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}", field="experiment")
        if self.experiment in RANDOMIZED and self.seed is None:
            raise ConfigError(f"{self.experiment} needs a seed", field="seed")
        if self.experiment == "caustic-sweep" and self.mesh is None:
            raise ConfigError("caustic-sweep needs a mesh", field="mesh")
        if self.experiment in ("flow", "events") and self.shape is None:
            raise ConfigError(f"{self.experiment} needs a shape", field="shape")
        if self.experiment == "equilibria" and self.shape is None and self.mesh is None:
            raise ConfigError("equilibria needs a shape or a mesh", field="shape")
        if not 0.0 <= self.offset < 1.0:
            raise ConfigError("offset must lie in [0, 1)", field="offset")
        for name in ("n", "mesh_n", "trials", "rungs", "offsets", "points"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigError(f"{name} must be positive", field=name)
        if self.steps < 0:
            raise ConfigError("steps must be non-negative", field="steps")
        if self.kind not in ("csf", "eikonal"):
            raise ConfigError(f"unknown flow kind {self.kind!r}", field="kind")
        if self.case not in ("i", "ii", "iii", "iv"):
            raise ConfigError(f"unknown case {self.case!r}", field="case")
        if self.exponent not in ("n-1", "n"):
            raise ConfigError(f"unknown exponent variant {self.exponent!r}", field="exponent")
        if self.threads is not None and self.threads < 1:
            raise ConfigError("threads must be positive", field="threads")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive", field="dt")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ExperimentConfig":
        """Build from a mapping keyed by field name; lists become tuples.

        Raises:
            ConfigError: On an unknown key.
        """
        known = {f.name for f in fields(cls)}
        for key in doc:
            if key not in known:
                raise ConfigError(f"unknown key {key!r}", field=key)
        clean = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
        return cls(**clean)

    @classmethod
    def from_json(cls, path: Union[str, Path], **overrides: Any) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {str(path)!r}: {e}", field="config") from e
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object", field="config")
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(doc)

    def with_changes(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def resolve_workers(threads: Optional[int] = None) -> int:
    """--threads, then $EQLAB_THREADS, then the CPU count.

    Raises:
        ConfigError: If the environment value is not a positive integer.
    """
    if threads is not None:
        return threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError as e:
            raise ConfigError(f"{THREADS_ENV}={env!r} is not an integer", field="threads") from e
        if value < 1:
            raise ConfigError(f"{THREADS_ENV} must be positive", field="threads")
        return value
    return os.cpu_count() or 1
