"""
Triangulated Convex Surfaces

`TriMesh` stores a closed triangulated convex surface with outward faces and
the derived edge/face incidence. The readers accept ASCII OFF and OBJ;
polygonal faces are fan-triangulated. Coplanar neighboring triangles are
grouped into facets so that quads of a cube count as one face.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateSolidError, MeshLoadError

logger = logging.getLogger(__name__)

DEFAULT_CONVEX_TOL = 1e-9
FLAT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Closed convex triangle mesh with outward orientation.

    Attributes:
        vertices: (V, 3) points.
        faces: (F, 3) vertex indices, counterclockwise seen from outside.
    """

    vertices: np.ndarray
    faces: np.ndarray
    name: str = field(default="mesh", compare=False)

    @classmethod
    def from_arrays(
        cls,
        vertices: Any,
        faces: Any,
        name: str = "mesh",
        validate: bool = True,
        tol: float = DEFAULT_CONVEX_TOL,
        orient: bool = True,
    ) -> "TriMesh":
        """Build a mesh, repairing face orientation and checking topology.

        Raises:
            MeshLoadError: Open or non-manifold edges, wrong Euler
                characteristic, or a reflex edge.
        """
        v = np.asarray(vertices, dtype=float)
        f = np.asarray(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3 or f.ndim != 2 or f.shape[1] != 3:
            raise MeshLoadError("expected (V, 3) vertices and (F, 3) faces", feature="shape")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise MeshLoadError("face index out of range", feature="faces")
        if orient:
            f = _orient_outward(v, f)
        mesh = cls(v, f, name)
        if validate:
            mesh.validate(tol)
        return mesh

    @property
    def V(self) -> int:
        return len(self.vertices)

    @property
    def F(self) -> int:
        return len(self.faces)

    @property
    def E(self) -> int:
        return len(self.edges)

    @property
    def euler(self) -> int:
        return self.V - self.E + self.F

    @cached_property
    def scale(self) -> float:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    @cached_property
    def _edge_table(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        half = np.concatenate(
            [self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]]
        )
        key = np.sort(half, axis=1)
        edges, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return edges, inverse.reshape(-1), counts

    @property
    def edges(self) -> np.ndarray:
        """(E, 2) sorted vertex pairs."""
        return self._edge_table[0]

    @cached_property
    def face_edges(self) -> np.ndarray:
        """(F, 3) edge ids of (v0 v1), (v1 v2), (v2 v0)."""
        return self._edge_table[1].reshape(3, self.F).T

    @cached_property
    def edge_faces(self) -> np.ndarray:
        """(E, 2) the two faces adjacent to each edge."""
        inverse = self._edge_table[1]
        face_of = np.tile(np.arange(self.F), 3)
        order = np.argsort(inverse, kind="stable")
        return face_of[order].reshape(-1, 2)

    @cached_property
    def face_normals(self) -> np.ndarray:
        a, b, c = (self.vertices[self.faces[:, k]] for k in range(3))
        n = np.cross(b - a, c - a)
        return n / np.linalg.norm(n, axis=1)[:, None]

    @cached_property
    def flat_edges(self) -> np.ndarray:
        """Edges whose two faces are coplanar."""
        n1 = self.face_normals[self.edge_faces[:, 0]]
        n2 = self.face_normals[self.edge_faces[:, 1]]
        return np.linalg.norm(np.cross(n1, n2), axis=1) < FLAT_TOL

    @cached_property
    def facets(self) -> np.ndarray:
        """Facet label of every face; faces joined by flat edges share a label."""
        pairs = self.edge_faces[self.flat_edges]
        graph = coo_matrix(
            (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(self.F, self.F)
        )
        _, labels = connected_components(graph, directed=False)
        return labels

    @cached_property
    def neighbors(self) -> Tuple[np.ndarray, np.ndarray]:
        """Directed vertex pairs (v, w) for every edge in both directions."""
        e = self.edges
        return np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]])

    def validate(self, tol: float = DEFAULT_CONVEX_TOL) -> None:
        counts = self._edge_table[2]
        if np.any(counts != 2):
            i = int(np.argmax(counts != 2))
            a, b = self.edges[i]
            what = "open mesh" if counts[i] < 2 else "non-manifold edge"
            raise MeshLoadError(what, feature=f"edge {a}-{b}", faces=int(counts[i]))
        if self.euler != 2:
            raise MeshLoadError(
                "Euler characteristic is not 2",
                feature="topology",
                V=self.V,
                E=self.E,
                F=self.F,
            )
        f1, f2 = self.edge_faces[:, 0], self.edge_faces[:, 1]
        opposite = self.faces[f2].sum(axis=1) - self.edges.sum(axis=1)
        base = self.vertices[self.edges[:, 0]]
        height = np.sum(self.face_normals[f1] * (self.vertices[opposite] - base), axis=1)
        if np.any(height > tol * self.scale):
            i = int(np.argmax(height))
            a, b = self.edges[i]
            raise MeshLoadError("not convex", feature=f"edge {a}-{b}", height=float(height[i]))

    def contains(self, o: Sequence[float]) -> bool:
        """Strictly inside every face plane."""
        rel = self.vertices[self.faces[:, 0]] - np.asarray(o, dtype=float)
        return bool(np.all(np.sum(self.face_normals * rel, axis=1) > 0.0))

    def translated(self, shift: Sequence[float]) -> "TriMesh":
        return TriMesh(self.vertices + np.asarray(shift, dtype=float), self.faces, self.name)


def _orient_outward(v: np.ndarray, f: np.ndarray) -> np.ndarray:
    if not len(f):
        return f
    inner = v[np.unique(f)].mean(axis=0)
    a, b, c = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    n = np.cross(b - a, c - a)
    flip = np.sum(n * ((a + b + c) / 3.0 - inner), axis=1) < 0.0
    if np.any(flip):
        logger.debug("flipped %d faces to outward orientation", int(flip.sum()))
        f = f.copy()
        f[flip] = f[flip][:, [0, 2, 1]]
    return f


def solid_centroid(mesh: TriMesh, tol: float = 1e-12) -> np.ndarray:
    """Uniform-density centroid from signed tetrahedra against the origin.

    Raises:
        DegenerateSolidError: If the enclosed volume is below tol * scale^3.
    """
    a, b, c = (mesh.vertices[mesh.faces[:, k]] for k in range(3))
    vol = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    total = float(vol.sum())
    if abs(total) < tol * mesh.scale**3:
        raise DegenerateSolidError(total)
    return np.sum(vol[:, None] * (a + b + c), axis=0) / (4.0 * total)


def solid_volume(mesh: TriMesh) -> float:
    a, b, c = (mesh.vertices[mesh.faces[:, k]] for k in range(3))
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def _fan(polygon: List[int]) -> List[List[int]]:
    return [[polygon[0], polygon[k], polygon[k + 1]] for k in range(1, len(polygon) - 1)]


def _data_lines(text: str) -> Iterable[Tuple[int, List[str]]]:
    for number, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            yield number, body.split()


def read_off(text: str) -> Tuple[np.ndarray, np.ndarray]:
    lines = list(_data_lines(text))
    if not lines or not lines[0][1][0].upper().endswith("OFF"):
        raise MeshLoadError("missing OFF header", feature="line 1")
    head = lines[0][1][1:]
    rest = lines[1:]
    if not head:
        head, rest = rest[0][1], rest[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
        verts = [[float(x) for x in tok[:3]] for _, tok in rest[:nv]]
        faces: List[List[int]] = []
        for number, tok in rest[nv : nv + nf]:
            k = int(tok[0])
            poly = [int(x) for x in tok[1 : k + 1]]
            if len(poly) != k or k < 3:
                raise MeshLoadError("malformed face", feature=f"line {number}")
            faces.extend(_fan(poly))
    except (ValueError, IndexError) as e:
        raise MeshLoadError("malformed OFF body", feature=str(e)) from e
    if len(verts) != nv:
        raise MeshLoadError("vertex count mismatch", feature="header", expected=nv, found=len(verts))
    return np.asarray(verts), np.asarray(faces, dtype=np.int64)


def read_obj(text: str) -> Tuple[np.ndarray, np.ndarray]:
    verts: List[List[float]] = []
    faces: List[List[int]] = []
    for number, tok in _data_lines(text):
        try:
            if tok[0] == "v":
                verts.append([float(x) for x in tok[1:4]])
            elif tok[0] == "f":
                poly = []
                for t in tok[1:]:
                    idx = int(t.partition("/")[0])
                    poly.append(len(verts) + idx if idx < 0 else idx - 1)
                if len(poly) < 3:
                    raise MeshLoadError("face with fewer than 3 corners", feature=f"line {number}")
                faces.extend(_fan(poly))
        except ValueError as e:
            raise MeshLoadError("malformed OBJ record", feature=f"line {number}") from e
    return np.asarray(verts), np.asarray(faces, dtype=np.int64)


def load_mesh(path: Union[str, Path], validate: bool = True) -> TriMesh:
    """Read an OFF or OBJ file into a validated TriMesh."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    suffix = p.suffix.lower()
    if suffix == ".off":
        v, f = read_off(text)
    elif suffix == ".obj":
        v, f = read_obj(text)
    else:
        raise MeshLoadError(f"unsupported mesh format {suffix!r}", feature="suffix")
    logger.info("loaded %s: V=%d F=%d", p.name, len(v), len(f))
    return TriMesh.from_arrays(v, f, name=p.stem, validate=validate)


def write_obj(
    path: Union[str, Path],
    mesh: TriMesh,
    labels: Optional[Dict[str, Sequence[int]]] = None,
) -> None:
    """Write the mesh as OBJ with one `# label id` comment per labelled feature."""
    out: List[str] = [f"# {mesh.name}"]
    for label, ids in (labels or {}).items():
        out.extend(f"# {label} {i}" for i in ids)
    out.extend(f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices)
    out.extend(f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces)
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
