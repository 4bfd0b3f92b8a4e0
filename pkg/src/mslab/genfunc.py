"""Generating functionals of boundary data: Type-I and Type-II.

The *boundary Lagrangian* of a region is the discrete action evaluated on
the solution of the Dirichlet boundary-value problem — a scalar function of
the boundary values alone.  By the envelope property its exact gradient is
the field of *normal momenta*: at boundary node b the gradient equals the
sum of vertex-slot derivatives of the triangle actions over the region
triangles containing b.  Both routes are implemented independently so tests
can cross-check them.

The *boundary Hamiltonian* is the Type-II transform for the supported mixed
split of a rectangle boundary: values prescribed on the bottom row and both
full side columns (side A, including all four corners), momenta prescribed
on the strict interior of the top row (side B).  With u* the solution of the
mixed problem,

    H(phi_A, pi_B) = -S(u*) + sum_B pi_b * u*_b,

using plain node sums: the slot-sum momenta already carry the boundary
measure, which makes the Type-I and Type-II functionals exactly compatible
and gives the exact derivative structure

    dH/dphi_a = -pi_a(u*)   (a in A),      dH/dpi_b = u*_b   (b in B),

together with H + S(u*) = sum_B pi_b u*_b (discrete Legendre relation).
``NormalMomentumField`` additionally carries trapezoidal arc-length weights
of the boundary polyline for converting momentum sums into densities when
comparing against continuum quantities; the functionals never use them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.sparse import csc_matrix

from .delsolve import (BvpSolveReport, _array_jet, _factor_and_rcond,
                       solve_bvp)
from .jetmesh import (BoundaryData, DiscreteField, QuadMesh, RectRegion,
                      Region, TriangleIndex, boundary_nodes, interior_nodes,
                      region_to_json, parse_region, region_triangles)
from .lagrangian import (LagrangianDensity, QuadraticDensity, eval_Ld,
                         grad_Ld, hess_Ld)


def region_action(density: LagrangianDensity, field: DiscreteField,
                  region: Region) -> float:
    """Sum of triangle actions of ``field`` over the region."""
    mesh = field.mesh
    total = 0.0
    for tri in region_triangles(region):
        total += eval_Ld(density, _array_jet(field.values, tri, mesh.dt, mesh.dx))
    return float(total)


@dataclass(frozen=True)
class BoundaryLagrangianResult:
    """Extremal action value together with the solve it came from."""

    value: float
    report: BvpSolveReport


def boundary_lagrangian(density: LagrangianDensity, mesh: QuadMesh,
                        boundary: BoundaryData, *, tol: float = 1e-12,
                        max_iter: int = 50,
                        initial: DiscreteField = None) -> BoundaryLagrangianResult:
    """Extremal discrete action as a function of Dirichlet boundary data."""
    report = solve_bvp(density, mesh, boundary, tol=tol, max_iter=max_iter,
                       initial=initial)
    value = region_action(density, report.field, boundary.region)
    return BoundaryLagrangianResult(value=value, report=report)


# ---------------------------------------------------------------------------
# Normal momenta


class NormalMomentumField:
    """Slot-sum momenta at the boundary nodes of a region.

    ``values[k]`` is the momentum at ``nodes[k]`` (ordered as
    :func:`~mslab.jetmesh.boundary_nodes`): the sum of vertex-slot derivatives
    of the triangle action over region triangles containing the node.  For a
    field solving the interior equations this equals the exact gradient of
    the extremal action in the boundary values.  ``weights`` are trapezoidal
    arc-length weights of the boundary polyline (reporting aid for momentum
    densities; not used by the functionals).
    """

    __slots__ = ("region", "nodes", "values", "weights")

    def __init__(self, region: Region, nodes, values, weights) -> None:
        self.region = region
        self.nodes = tuple(nodes)
        vals = np.asarray(values, dtype=float)
        wts = np.asarray(weights, dtype=float)
        vals.setflags(write=False)
        wts.setflags(write=False)
        self.values = vals
        self.weights = wts

    def as_mapping(self) -> dict:
        return {nd: float(v) for nd, v in zip(self.nodes, self.values)}

    def densities(self) -> np.ndarray:
        """Momentum per unit boundary length (values / weights)."""
        return self.values / self.weights


def _trapezoid_weights(region: Region, mesh: QuadMesh) -> np.ndarray:
    """Half the summed lengths of the two boundary segments at each node."""
    nodes = boundary_nodes(region)
    pts = np.array([(mesh.node_x(i), mesh.node_t(n)) for (n, i) in nodes])
    m = len(pts)
    seg = np.array([np.hypot(*(pts[(k + 1) % m] - pts[k])) for k in range(m)])
    return 0.5 * (seg + np.roll(seg, 1))


def normal_momenta(density: LagrangianDensity, field: DiscreteField,
                   region: Region) -> NormalMomentumField:
    """Slot-sum boundary momenta of ``field`` on ``region``."""
    mesh = field.mesh
    nodes = boundary_nodes(region)
    sums = {nd: 0.0 for nd in nodes}
    for tri in region_triangles(region):
        grad = None
        for slot, vtx in enumerate(tri.vertices):
            if vtx in sums:
                if grad is None:
                    grad = grad_Ld(density, _array_jet(field.values, tri,
                                                       mesh.dt, mesh.dx))
                sums[vtx] += grad.as_tuple()[slot]
    return NormalMomentumField(region, nodes, [sums[nd] for nd in nodes],
                               _trapezoid_weights(region, mesh))


# ---------------------------------------------------------------------------
# Pointwise momentum map and canonical field equations


@dataclass(frozen=True)
class LegendreData:
    """Covariant momenta and energy of one jet point.

    ``p_t`` and ``p_x`` are the partials of the density in the time and
    space quotients; ``hamiltonian`` is p_t*v + p_x*w - L (the negative of
    the covariant scalar momentum, kept internal to this record).
    """

    p_t: float
    p_x: float
    hamiltonian: float


def legendre(density: LagrangianDensity, v: float, w: float,
             ubar: float = 0.0) -> LegendreData:
    """Pointwise momentum map of a density at jet values (v, w, ubar)."""
    lv, lw, _ = (float(p) for p in density.partials(v, w, ubar))
    lval = float(density.value(v, w, ubar))
    return LegendreData(p_t=lv, p_x=lw, hamiltonian=lv * v + lw * w - lval)


@dataclass(frozen=True)
class DdwResidualReport:
    """Sup-norms of the canonical field-equation residuals on a field.

    ``transport_sup`` covers the two gradient equations (jet quotients equal
    the momentum-gradient of the energy), ``divergence_sup`` the momentum
    divergence equation.  On DEL solutions both vanish at first order under
    refinement.
    """

    transport_sup: float
    divergence_sup: float
    n_sites: int


def ddw_residual(density: QuadraticDensity, field: DiscreteField,
                 region: Region = None) -> DdwResidualReport:
    """Forward-difference residuals of the canonical (first-order) equations.

    Momenta are produced by :func:`legendre` on each triangle jet; the
    divergence equation is evaluated with the forward differences matching
    the jet map:

        [p_t(n+1, i) - p_t(n, i)]/dt + [p_x(n, i+1) - p_x(n, i)]/dx
            + dH/du(u(n, i), p(n, i))  ->  0,

    and the gradient equations compare (v, w) at each triangle with the
    momentum-gradient of the energy at (u(n, i), p(n, i)).  Requires an
    invertible velocity block (quadratic densities with vv*ww != vw^2).
    """
    if not isinstance(density, QuadraticDensity):
        raise ValueError("canonical-equation residuals support quadratic densities")
    a11, a12, a22 = density.vv, density.vw, density.ww
    det = a11 * a22 - a12 * a12
    if det == 0.0:
        raise ValueError("velocity block of the density is singular; no "
                         "momentum form of the equations exists")
    mesh = field.mesh
    if region is None:
        region = RectRegion(0, 0, mesh.nt, mesh.nx)
    if not region.fits(mesh):
        raise ValueError(f"region {region} does not fit mesh with shape {mesh.shape}")

    tris = set(region_triangles(region))

    def momenta(tri):
        jet = _array_jet(field.values, tri, mesh.dt, mesh.dx)
        data = legendre(density, jet.v, jet.w, jet.ubar)
        return jet, data

    transport_sup = 0.0
    divergence_sup = 0.0
    n_sites = 0
    for tri in tris:
        up = TriangleIndex(tri.n + 1, tri.i)
        rightward = TriangleIndex(tri.n, tri.i + 1)
        if up not in tris or rightward not in tris:
            continue
        jet, here = momenta(tri)
        _, above = momenta(up)
        _, beside = momenta(rightward)
        u_here = float(field.values[tri.n, tri.i])
        # invert the momentum map at (u, p): velocities from the quadratic block
        bt = here.p_t - density.vu * u_here
        bx = here.p_x - density.wu * u_here
        v_rec = (a22 * bt - a12 * bx) / det
        w_rec = (a11 * bx - a12 * bt) / det
        transport_sup = max(transport_sup, abs(jet.v - v_rec), abs(jet.w - w_rec))
        du_energy = -(density.uu * u_here + density.vu * v_rec + density.wu * w_rec)
        div = ((above.p_t - here.p_t) / mesh.dt
               + (beside.p_x - here.p_x) / mesh.dx
               - du_energy)
        divergence_sup = max(divergence_sup, abs(div))
        n_sites += 1
    if n_sites == 0:
        raise ValueError("region too small: no site has both forward neighbours")
    return DdwResidualReport(transport_sup=transport_sup,
                             divergence_sup=divergence_sup, n_sites=n_sites)


# ---------------------------------------------------------------------------
# Type-II data and boundary Hamiltonian


def canonical_type2_split(region: RectRegion) -> tuple:
    """(A, B) node lists of the supported mixed split.

    A = bottom row plus both full side columns (all four corners included);
    B = strict interior of the top row.  Requires at least two space cells so
    B is non-empty.
    """
    if not isinstance(region, RectRegion):
        raise ValueError("the mixed split is defined for rectangle regions")
    if region.nx < 2:
        raise ValueError("need nx >= 2 cells so the top row has interior nodes")
    b_side = [(region.n1, i) for i in range(region.i0 + 1, region.i1)]
    b_set = set(b_side)
    a_side = [nd for nd in boundary_nodes(region) if nd not in b_set]
    return a_side, b_side


class MixedBoundaryData:
    """Dirichlet values on side A and momenta on side B of a rectangle.

    Only the canonical split of :func:`canonical_type2_split` is supported;
    the constructor validates that the two mappings cover exactly those node
    sets.
    """

    __slots__ = ("region", "dirichlet", "momenta")

    def __init__(self, region: RectRegion, dirichlet: Mapping, momenta: Mapping):
        a_side, b_side = canonical_type2_split(region)
        if set(dirichlet) != set(a_side):
            raise ValueError("value data must cover exactly the bottom row and "
                             "both side columns")
        if set(momenta) != set(b_side):
            raise ValueError("momentum data must cover exactly the strict "
                             "interior of the top row")
        vals = list(dirichlet.values()) + list(momenta.values())
        if not all(math.isfinite(float(v)) for v in vals):
            raise ValueError("mixed boundary data contains NaN/Inf")
        self.region = region
        self.dirichlet = {nd: float(dirichlet[nd]) for nd in a_side}
        self.momenta = {nd: float(momenta[nd]) for nd in b_side}

    def to_json(self) -> dict:
        return {
            "region": region_to_json(self.region),
            "A": {f"{n},{i}": v for (n, i), v in self.dirichlet.items()},
            "B": {f"{n},{i}": v for (n, i), v in self.momenta.items()},
        }

    @classmethod
    def from_json(cls, obj) -> "MixedBoundaryData":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if set(obj) != {"region", "A", "B"}:
            raise ValueError("mixed data needs exactly the keys region/A/B")
        region = parse_region(obj["region"])

        def decode(mapping):
            out = {}
            for key, val in mapping.items():
                n_str, i_str = key.split(",")
                out[(int(n_str), int(i_str))] = float(val)
            return out

        return cls(region, decode(obj["A"]), decode(obj["B"]))

    def perturbed_value(self, node, delta: float) -> "MixedBoundaryData":
        d = dict(self.dirichlet)
        d[node] += delta
        return MixedBoundaryData(self.region, d, self.momenta)

    def perturbed_momentum(self, node, delta: float) -> "MixedBoundaryData":
        m = dict(self.momenta)
        m[node] += delta
        return MixedBoundaryData(self.region, self.dirichlet, m)


def type2_data_from_field(density: LagrangianDensity, field: DiscreteField,
                          region: RectRegion) -> MixedBoundaryData:
    """Read canonical mixed data (values on A, slot-sum momenta on B) off a field."""
    a_side, b_side = canonical_type2_split(region)
    pi = normal_momenta(density, field, region).as_mapping()
    return MixedBoundaryData(region,
                             {nd: field[nd] for nd in a_side},
                             {nd: pi[nd] for nd in b_side})


@dataclass(frozen=True)
class BoundaryHamiltonianResult:
    """Type-II value, the mixed-problem solution and the condition indicator."""

    value: float
    field: DiscreteField
    rcond: float


def boundary_hamiltonian(density: QuadraticDensity, mesh: QuadMesh,
                         data: MixedBoundaryData) -> BoundaryHamiltonianResult:
    """Type-II generating value of the canonical mixed problem.

    Solves the square linear system consisting of the DEL equations at the
    strict interior nodes and the momentum conditions (slot sum = prescribed
    momentum) at the B nodes, then evaluates
    ``-S(u*) + sum_B pi_b * u*_b``.  Quadratic densities only (the mixed
    system is linear); the factorisation shares the condition guard of the
    Dirichlet solver.
    """
    if not isinstance(density, QuadraticDensity):
        raise ValueError("the mixed solve supports quadratic densities only")
    region = data.region
    if not region.fits(mesh):
        raise ValueError(f"region {region} does not fit mesh with shape {mesh.shape}")
    b_side = list(data.momenta)
    unknowns = interior_nodes(region) + b_side
    index = {nd: k for k, nd in enumerate(unknowns)}
    known = dict(data.dirichlet)

    tris = region_triangles(region)
    dt, dx = mesh.dt, mesh.dx
    zero = np.zeros(mesh.shape)

    # Equations: row per unknown.  Interior rows are DEL slot sums over the
    # node's three triangles; B rows are slot sums over region triangles
    # containing the node (here: the single top triangle below it).
    node_rows = {nd: [] for nd in unknowns}  # node -> list of (tri, slot)
    for tri in tris:
        for slot, vtx in enumerate(tri.vertices):
            if vtx in node_rows:
                node_rows[vtx].append((tri, slot))

    rows, cols, vals = [], [], []
    rhs = np.zeros(len(unknowns))
    for nd, pairs in node_rows.items():
        row_idx = index[nd]
        for tri, eq_slot in pairs:
            m = hess_Ld(density, _array_jet(zero, tri, dt, dx))
            for vtx_slot, vtx in enumerate(tri.vertices):
                col = index.get(vtx)
                if col is not None:
                    rows.append(row_idx)
                    cols.append(col)
                    vals.append(m[eq_slot, vtx_slot])
                else:
                    rhs[row_idx] -= m[eq_slot, vtx_slot] * known.get(vtx, 0.0)
    for nd, pi in data.momenta.items():
        rhs[index[nd]] += pi

    k = len(unknowns)
    jac = csc_matrix((vals, (rows, cols)), shape=(k, k))
    lu, rcond = _factor_and_rcond(jac, "boundary_hamiltonian")
    x = lu.solve(rhs)

    arr = np.zeros(mesh.shape)
    for nd, val in known.items():
        arr[nd] = val
    for nd, val in zip(unknowns, x):
        arr[nd] = val
    field = DiscreteField(mesh, arr)
    action = region_action(density, field, region)
    pairing = sum(pi * field[nd] for nd, pi in data.momenta.items())
    return BoundaryHamiltonianResult(value=float(-action + pairing),
                                     field=field, rcond=rcond)
