"""Space-time mesh, discrete fields and first-jet data on a triangulated grid.

The domain is a uniform rectangular grid in one space and one time dimension:
node (n, i) sits at (t, x) = (n*dt, i*dx) with 0 <= n <= nt, 0 <= i <= nx.
Each grid cell carries exactly one triangle,

    triangle (n, i) = ((n, i), (n, i+1), (n+1, i)),

so every interior node belongs to exactly three triangles (once in each
vertex slot).  The first-jet data of a field on a triangle is the triple of
vertex values together with the difference quotients

    v = (u3 - u1) / dt        (time slot),
    w = (u2 - u1) / dx        (space slot),
    ubar = (u1 + u2 + u3) / 3 (cell average),

which is what the Lagrangian densities consume.

Periodic runs treat all nx+1 stored columns as distinct ring sites with index
arithmetic mod (nx+1); column nx is a neighbour of column 0, not a copy of it.

Field values are validated to be finite on construction; NaN/Inf never
propagates silently.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence, Union

import numpy as np

Node = tuple  # (n, i) integer pair


def _check_positive(name: str, value: float) -> None:
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class QuadMesh:
    """Uniform grid with nt time cells and nx space cells.

    ``dt``/``dx`` are the cell sizes; there are (nt+1)*(nx+1) nodes.  The
    aspect ratio dt/dx plays the role of a Courant number for the unit-speed
    wave density.
    """

    dt: float
    dx: float
    nt: int
    nx: int

    def __post_init__(self) -> None:
        _check_positive("dt", self.dt)
        _check_positive("dx", self.dx)
        if int(self.nt) != self.nt or self.nt < 1:
            raise ValueError(f"nt must be an integer >= 1, got {self.nt!r}")
        if int(self.nx) != self.nx or self.nx < 1:
            raise ValueError(f"nx must be an integer >= 1, got {self.nx!r}")

    @property
    def aspect_ratio(self) -> float:
        """dt/dx; the three-triangle point stencil degenerates as this -> 1."""
        return self.dt / self.dx

    @property
    def shape(self) -> tuple:
        """(number of time levels, number of space columns) = (nt+1, nx+1)."""
        return (self.nt + 1, self.nx + 1)

    def node_t(self, n: int) -> float:
        return n * self.dt

    def node_x(self, i: int) -> float:
        return i * self.dx

    def triangles(self) -> Iterator["TriangleIndex"]:
        """All triangles, row-major."""
        for n in range(self.nt):
            for i in range(self.nx):
                yield TriangleIndex(n, i)


def build_mesh(dt: float, dx: float, nt: int, nx: int) -> QuadMesh:
    """Construct a validated mesh (see :class:`QuadMesh`)."""
    return QuadMesh(dt=float(dt), dx=float(dx), nt=int(nt), nx=int(nx))


@dataclass(frozen=True)
class TriangleIndex:
    """Triangle anchored at node (n, i); vertices (n,i), (n,i+1), (n+1,i)."""

    n: int
    i: int

    @property
    def vertices(self) -> tuple:
        return ((self.n, self.i), (self.n, self.i + 1), (self.n + 1, self.i))

    def fits(self, mesh: QuadMesh) -> bool:
        return 0 <= self.n < mesh.nt and 0 <= self.i < mesh.nx


@dataclass(frozen=True)
class JetTriple:
    """Vertex values of one triangle plus the cell sizes they were read on."""

    u1: float
    u2: float
    u3: float
    dt: float
    dx: float

    def __post_init__(self) -> None:
        for name in ("u1", "u2", "u3"):
            val = getattr(self, name)
            if not np.isfinite(val):
                raise ValueError(f"non-finite vertex value {name}={val!r}")
        _check_positive("dt", self.dt)
        _check_positive("dx", self.dx)

    @property
    def v(self) -> float:
        """Forward time difference quotient (u3 - u1)/dt."""
        return (self.u3 - self.u1) / self.dt

    @property
    def w(self) -> float:
        """Forward space difference quotient (u2 - u1)/dx."""
        return (self.u2 - self.u1) / self.dx

    @property
    def ubar(self) -> float:
        """Cell average (u1 + u2 + u3)/3."""
        return (self.u1 + self.u2 + self.u3) / 3.0


class DiscreteField:
    """Real-valued node function on a :class:`QuadMesh` (immutable).

    ``values[n, i]`` is the value at node (n, i).  The backing array is a
    read-only copy; ``with_value`` returns a modified copy so fields can be
    shared safely between reports.
    """

    __slots__ = ("mesh", "values")

    def __init__(self, mesh: QuadMesh, values) -> None:
        arr = np.array(values, dtype=float)
        if arr.shape != mesh.shape:
            raise ValueError(f"field shape {arr.shape} does not match mesh {mesh.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("field contains NaN/Inf values")
        arr.setflags(write=False)
        object.__setattr__(self, "mesh", mesh)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("DiscreteField is immutable; use with_value")

    @classmethod
    def zeros(cls, mesh: QuadMesh) -> "DiscreteField":
        return cls(mesh, np.zeros(mesh.shape))

    @classmethod
    def from_callable(cls, mesh: QuadMesh, fn: Callable[[float, float], float]) -> "DiscreteField":
        """Sample ``fn(t, x)`` at the nodes."""
        t = mesh.dt * np.arange(mesh.nt + 1)[:, None]
        x = mesh.dx * np.arange(mesh.nx + 1)[None, :]
        return cls(mesh, np.vectorize(fn)(t, x))

    def __getitem__(self, node: Node) -> float:
        return float(self.values[node])

    def with_value(self, n: int, i: int, value: float) -> "DiscreteField":
        arr = self.values.copy()
        arr[n, i] = value
        return DiscreteField(self.mesh, arr)

    def with_values(self, assignments: Mapping[Node, float]) -> "DiscreteField":
        arr = self.values.copy()
        for (n, i), val in assignments.items():
            arr[n, i] = val
        return DiscreteField(self.mesh, arr)


def jet_extension(field: DiscreteField, tri: TriangleIndex, periodic: bool = False) -> JetTriple:
    """First-jet data of ``field`` on ``tri``.

    With ``periodic`` the space index wraps mod (nx+1) over the ring of
    distinct columns; otherwise the triangle must fit inside the mesh.
    """
    mesh = field.mesh
    if periodic:
        ncols = mesh.nx + 1
        if not 0 <= tri.n < mesh.nt:
            raise ValueError(f"triangle {tri} outside time range of mesh")
        i = tri.i % ncols
        u1 = field.values[tri.n, i]
        u2 = field.values[tri.n, (i + 1) % ncols]
        u3 = field.values[tri.n + 1, i]
    else:
        if not tri.fits(mesh):
            raise ValueError(f"triangle {tri} does not fit in mesh with shape {mesh.shape}")
        (n1, i1), (n2, i2), (n3, i3) = tri.vertices
        u1 = field.values[n1, i1]
        u2 = field.values[n2, i2]
        u3 = field.values[n3, i3]
    return JetTriple(float(u1), float(u2), float(u3), mesh.dt, mesh.dx)


# ---------------------------------------------------------------------------
# Regions


@dataclass(frozen=True)
class RectRegion:
    """Sub-grid of nt x nx cells anchored at node (n0, i0).

    Nodes run over n0..n0+nt, i0..i0+nx.  Note the single-orientation
    triangulation: the top-right corner node belongs to no triangle of the
    region, so its value never enters the region action.
    """

    n0: int
    i0: int
    nt: int
    nx: int

    def __post_init__(self) -> None:
        if self.n0 < 0 or self.i0 < 0:
            raise ValueError("region anchor must be non-negative")
        if self.nt < 1 or self.nx < 1:
            raise ValueError("region must span at least one cell in each direction")

    @property
    def n1(self) -> int:
        return self.n0 + self.nt

    @property
    def i1(self) -> int:
        return self.i0 + self.nx

    def fits(self, mesh: QuadMesh) -> bool:
        return self.n1 <= mesh.nt and self.i1 <= mesh.nx


@dataclass(frozen=True)
class Patch3Region:
    """The three triangles sharing interior node (n, i) as a vertex."""

    n: int
    i: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.i < 1:
            raise ValueError("patch3 centre must have n >= 1 and i >= 1")

    def fits(self, mesh: QuadMesh) -> bool:
        return self.n + 1 <= mesh.nt and self.i + 1 <= mesh.nx


Region = Union[RectRegion, Patch3Region]


def region_triangles(region: Region) -> list:
    """Triangles making up the region (row-major for rectangles)."""
    if isinstance(region, RectRegion):
        return [TriangleIndex(n, i)
                for n in range(region.n0, region.n1)
                for i in range(region.i0, region.i1)]
    if isinstance(region, Patch3Region):
        n, i = region.n, region.i
        return [TriangleIndex(n, i), TriangleIndex(n, i - 1), TriangleIndex(n - 1, i)]
    raise TypeError(f"unknown region type {type(region).__name__}")


def interior_nodes(region: Region) -> list:
    """Nodes where the discrete Euler-Lagrange equations are imposed."""
    if isinstance(region, RectRegion):
        return [(n, i)
                for n in range(region.n0 + 1, region.n1)
                for i in range(region.i0 + 1, region.i1)]
    if isinstance(region, Patch3Region):
        return [(region.n, region.i)]
    raise TypeError(f"unknown region type {type(region).__name__}")


def boundary_nodes(region: Region) -> list:
    """Boundary nodes, each exactly once, counterclockwise.

    Orientation is counterclockwise in the plane with x horizontal and t
    vertical.  Rectangles start at the minimal corner (n0, i0) and run along
    the bottom row, up the right column, back along the top row and down the
    left column.  The three-triangle patch starts at (n, i+1) and walks the
    hexagonal link of the centre node.
    """
    if isinstance(region, RectRegion):
        n0, n1, i0, i1 = region.n0, region.n1, region.i0, region.i1
        out = [(n0, i) for i in range(i0, i1 + 1)]
        out += [(n, i1) for n in range(n0 + 1, n1 + 1)]
        out += [(n1, i) for i in range(i1 - 1, i0 - 1, -1)]
        out += [(n, i0) for n in range(n1 - 1, n0, -1)]
        return out
    if isinstance(region, Patch3Region):
        n, i = region.n, region.i
        return [(n, i + 1), (n + 1, i), (n + 1, i - 1),
                (n, i - 1), (n - 1, i), (n - 1, i + 1)]
    raise TypeError(f"unknown region type {type(region).__name__}")


def region_nodes(region: Region) -> list:
    """All nodes of the region (boundary + interior), row-major."""
    if isinstance(region, RectRegion):
        return [(n, i)
                for n in range(region.n0, region.n1 + 1)
                for i in range(region.i0, region.i1 + 1)]
    if isinstance(region, Patch3Region):
        return boundary_nodes(region) + [(region.n, region.i)]
    raise TypeError(f"unknown region type {type(region).__name__}")


# ---------------------------------------------------------------------------
# Boundary data


class BoundaryData:
    """Ordered (node, value) data on the boundary of a region."""

    __slots__ = ("region", "nodes", "values")

    def __init__(self, region: Region, values: Sequence[float]) -> None:
        nodes = boundary_nodes(region)
        arr = np.array(values, dtype=float)
        if arr.shape != (len(nodes),):
            raise ValueError(
                f"expected {len(nodes)} boundary values for {region}, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("boundary data contains NaN/Inf values")
        arr.setflags(write=False)
        self.region = region
        self.nodes = tuple(nodes)
        self.values = arr

    @classmethod
    def from_field(cls, field: DiscreteField, region: Region) -> "BoundaryData":
        nodes = boundary_nodes(region)
        return cls(region, [field[nd] for nd in nodes])

    @classmethod
    def from_mapping(cls, region: Region, mapping: Mapping[Node, float]) -> "BoundaryData":
        nodes = boundary_nodes(region)
        missing = [nd for nd in nodes if nd not in mapping]
        if missing:
            raise ValueError(f"boundary values missing for nodes {missing}")
        extra = set(mapping) - set(nodes)
        if extra:
            raise ValueError(f"values given for non-boundary nodes {sorted(extra)}")
        return cls(region, [mapping[nd] for nd in nodes])

    def as_mapping(self) -> dict:
        return {nd: float(val) for nd, val in zip(self.nodes, self.values)}

    def perturbed(self, index: int, delta: float) -> "BoundaryData":
        vals = self.values.copy()
        vals[index] += delta
        return BoundaryData(self.region, vals)


# ---------------------------------------------------------------------------
# External formats


def field_to_csv(field: DiscreteField, path) -> None:
    """Write a field as CSV with header ``n,i,u``, one row per node, row-major."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "i", "u"])
        nt, nx = field.mesh.nt, field.mesh.nx
        for n in range(nt + 1):
            for i in range(nx + 1):
                writer.writerow([n, i, repr(float(field.values[n, i]))])


def field_from_csv(mesh: QuadMesh, path) -> DiscreteField:
    """Read a field written by :func:`field_to_csv`; every node must appear once."""
    arr = np.full(mesh.shape, np.nan)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["n", "i", "u"]:
            raise ValueError(f"expected CSV header 'n,i,u', got {header!r}")
        for row in reader:
            if not row:
                continue
            n, i, u = int(row[0]), int(row[1]), float(row[2])
            if not (0 <= n <= mesh.nt and 0 <= i <= mesh.nx):
                raise ValueError(f"node ({n}, {i}) outside mesh with shape {mesh.shape}")
            arr[n, i] = u
    if np.isnan(arr).any():
        raise ValueError("CSV does not cover every mesh node")
    return DiscreteField(mesh, arr)


def region_to_json(region: Region) -> dict:
    """JSON-able description of a region."""
    if isinstance(region, RectRegion):
        return {"kind": "rect", "n0": region.n0, "i0": region.i0,
                "nt": region.nt, "nx": region.nx}
    if isinstance(region, Patch3Region):
        return {"kind": "patch3", "n": region.n, "i": region.i}
    raise TypeError(f"unknown region type {type(region).__name__}")


def parse_region(obj) -> Region:
    """Inverse of :func:`region_to_json`; accepts a dict or a JSON string."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError(f"region description must be a dict with a 'kind', got {obj!r}")
    kind = obj["kind"]
    fields = {k: v for k, v in obj.items() if k != "kind"}
    if kind == "rect":
        expected = {"n0", "i0", "nt", "nx"}
        if set(fields) != expected:
            raise ValueError(f"rect region needs keys {sorted(expected)}, got {sorted(fields)}")
        return RectRegion(int(fields["n0"]), int(fields["i0"]),
                          int(fields["nt"]), int(fields["nx"]))
    if kind == "patch3":
        expected = {"n", "i"}
        if set(fields) != expected:
            raise ValueError(f"patch3 region needs keys {sorted(expected)}, got {sorted(fields)}")
        return Patch3Region(int(fields["n"]), int(fields["i"]))
    raise ValueError(f"unknown region kind {kind!r}")
