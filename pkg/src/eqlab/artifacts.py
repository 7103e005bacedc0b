"""
Run Artifacts

Every run writes into one directory: CSV tables with floats at 17
significant digits, JSON documents with sorted keys, JSON-lines event logs,
OBJ snapshots with a JSON sidecar, and `manifest.json`. Only the manifest's
`wall_time` differs between two runs with the same configuration.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np

from .meshes import TriMesh, write_obj

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def format_value(value: Any) -> str:
    """CSV cell text; floats use 17 significant digits, None is empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "nan"
        return format(x, ".17g")
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def jsonable(value: Any) -> Any:
    """Plain JSON types from numpy scalars, arrays, tuples and enums."""
    if isinstance(value, Enum):
        return value.value
    if value is None or isinstance(value, (str, bool, int)):
        return value
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return x if math.isfinite(x) else str(x)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    return str(value)


def dumps(doc: Any) -> str:
    return json.dumps(jsonable(doc), indent=2, sort_keys=True) + "\n"


def write_json(path: Union[str, Path], doc: Any) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(dumps(doc), encoding="utf-8")
    return p


def write_csv(
    path: Union[str, Path],
    rows: Sequence[Mapping[str, Any]],
    columns: Optional[Sequence[str]] = None,
) -> Path:
    """Write rows with a header; columns default to the first row's keys."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    cols = list(columns) if columns is not None else (list(rows[0]) if rows else [])
    with p.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in cols])
    return p


def write_jsonl(path: Union[str, Path], records: Iterable[Mapping[str, Any]]) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(jsonable(r), sort_keys=True) for r in records]
    p.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return p


def write_snapshot(
    directory: Union[str, Path],
    name: str,
    mesh: TriMesh,
    labels: Mapping[str, Sequence[int]],
) -> Path:
    """OBJ with `# label id` comments and a sidecar `<name>.json` of the same labels."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_obj(d / f"{name}.obj", mesh, {k: list(v) for k, v in labels.items()})
    write_json(d / f"{name}.json", {k: list(v) for k, v in labels.items()})
    return d / f"{name}.obj"


@dataclass
class RunDirectory:
    """Collects the files of one run and writes the manifest last.

    `primary` renames the run's main CSV table; every other file keeps its
    default name next to it.
    """

    root: Path
    files: List[str] = field(default_factory=list)
    primary: Optional[str] = None

    def __post_init__(self) -> None:
        self.root = Path(self.root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _track(self, p: Path) -> Path:
        rel = str(p.relative_to(self.root))
        if rel not in self.files:
            self.files.append(rel)
        return p

    def json(self, name: str, doc: Any) -> Path:
        return self._track(write_json(self.root / name, doc))

    def csv(self, name: str, rows: Sequence[Mapping[str, Any]], columns: Optional[Sequence[str]] = None) -> Path:
        return self._track(write_csv(self.root / name, rows, columns))

    def primary_csv(
        self, default: str, rows: Sequence[Mapping[str, Any]], columns: Optional[Sequence[str]] = None
    ) -> Path:
        return self.csv(self.primary or default, rows, columns)

    def jsonl(self, name: str, records: Iterable[Mapping[str, Any]]) -> Path:
        return self._track(write_jsonl(self.root / name, records))

    def snapshot(self, name: str, mesh: TriMesh, labels: Mapping[str, Sequence[int]]) -> Path:
        obj = write_snapshot(self.root, name, mesh, labels)
        self._track(self.root / f"{name}.json")
        return self._track(obj)

    def manifest(self, config: Mapping[str, Any], version: str, wall_time: float) -> Path:
        doc: Dict[str, Any] = {
            "config": dict(config),
            "version": version,
            "wall_time": wall_time,
            "files": sorted(self.files),
        }
        logger.info("wrote %d artifacts to %s", len(self.files), self.root)
        return write_json(self.root / MANIFEST, doc)
