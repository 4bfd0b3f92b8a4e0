"""Discrete Euler-Lagrange equations: residuals, stepping and BVP solves.

The discrete action of a region is the sum of triangle actions.  Varying the
value at an interior node touches the three triangles containing it (once in
each vertex slot), so the discrete Euler-Lagrange (DEL) residual at (n, i) is

    R(n, i) = d1 Ld(tri(n, i)) + d2 Ld(tri(n, i-1)) + d3 Ld(tri(n-1, i)),

where dk is the k-th vertex-slot derivative.  For the wave density this is
the classical leapfrog stencil scaled by dt*dx/2.

Three solution drivers are provided:

* :func:`step_row` advances one time level by solving the DEL equations of
  the current level for the new row (a bidiagonal system, explicit for the
  wave density);
* :func:`solve_bvp` solves the space-time boundary-value problem on a region
  with Dirichlet data on the single boundary layer (Newton with Armijo
  backtracking, sparse LU);
* :func:`tangent_solve` solves the linearised DEL equations for a first
  variation with prescribed boundary tangent.

Every factorisation is accompanied by a reciprocal condition indicator

    rcond = 1 / (max(1, ||J||_1) * ||J^-1||_1),

exact for small systems and estimated on the sparse LU otherwise.  The
indicator is scale-sensitive on purpose: the three-triangle point stencil
degenerates when dt = dx (its 1x1 Jacobian dx/dt - dt/dx vanishes with
bounded data), and a scale-invariant measure would hide that.  Indicators
below 1e-12, and exactly singular factorisations, raise
:class:`SingularSystem`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import LinearOperator, onenormest, splu

from .jetmesh import (BoundaryData, DiscreteField, JetTriple, QuadMesh,
                      Region, TriangleIndex, interior_nodes)
from .lagrangian import LagrangianDensity, grad_Ld, hess_Ld

RCOND_FLOOR = 1e-12


class SolverError(RuntimeError):
    """A solve failed (non-convergence or breakdown)."""


class SingularSystem(SolverError):
    """The linearised system is singular or numerically indistinguishable from it."""

    def __init__(self, message: str, rcond: float = 0.0):
        super().__init__(message)
        self.rcond = rcond


# ---------------------------------------------------------------------------
# Closures


@dataclass(frozen=True)
class PeriodicClosure:
    """Spatial ring closure: all nx+1 columns are distinct sites mod nx+1."""


@dataclass(frozen=True)
class FixedClosure:
    """Fixed-value spatial closure: prescribed end values for each new row.

    ``left``/``right`` may be floats or callables of the new row index.
    """

    left: Union[float, Callable[[int], float]] = 0.0
    right: Union[float, Callable[[int], float]] = 0.0

    def end_values(self, row_index: int) -> tuple:
        left = self.left(row_index) if callable(self.left) else float(self.left)
        right = self.right(row_index) if callable(self.right) else float(self.right)
        return left, right


Closure = Union[PeriodicClosure, FixedClosure]


def parse_closure(obj) -> Closure:
    """Closure from config data: ``"periodic"`` or ``{"fixed": [left, right]}``."""
    if isinstance(obj, (PeriodicClosure, FixedClosure)):
        return obj
    if obj == "periodic":
        return PeriodicClosure()
    if isinstance(obj, dict) and set(obj) == {"fixed"}:
        left, right = obj["fixed"]
        return FixedClosure(float(left), float(right))
    raise ValueError(f"cannot parse closure {obj!r}")


# ---------------------------------------------------------------------------
# Residuals


def _row_jet(dt, dx, curr_row, next_row, i, i2) -> JetTriple:
    """Jet of the triangle anchored at column i (third vertex from next_row)."""
    return JetTriple(float(curr_row[i]), float(curr_row[i2]), float(next_row[i]), dt, dx)


def _del_residual_rows(density, dt, dx, prev_row, curr_row, next_row, i,
                       periodic: bool) -> float:
    """DEL residual at column i of the middle row, given three row arrays."""
    ncols = len(curr_row)
    if periodic:
        im1, ip1 = (i - 1) % ncols, (i + 1) % ncols
    else:
        if not 0 < i < ncols - 1:
            raise ValueError(f"column {i} has no interior stencil (0..{ncols - 1})")
        im1, ip1 = i - 1, i + 1
    t_here = _row_jet(dt, dx, curr_row, next_row, i, ip1)
    t_left = _row_jet(dt, dx, curr_row, next_row, im1, i)
    t_below = _row_jet(dt, dx, prev_row, curr_row, i, ip1)
    return (grad_Ld(density, t_here).d1
            + grad_Ld(density, t_left).d2
            + grad_Ld(density, t_below).d3)


def del_residual(density: LagrangianDensity, field: DiscreteField, n: int, i: int,
                 periodic: bool = False) -> float:
    """DEL residual of ``field`` at node (n, i).

    Requires 1 <= n <= nt-1; without the periodic closure also
    1 <= i <= nx-1 so the three-triangle stencil fits.
    """
    mesh = field.mesh
    if not 1 <= n <= mesh.nt - 1:
        raise ValueError(f"row {n} has no interior stencil (1..{mesh.nt - 1})")
    if periodic:
        i = i % (mesh.nx + 1)
    return _del_residual_rows(density, mesh.dt, mesh.dx,
                              field.values[n - 1], field.values[n],
                              field.values[n + 1], i, periodic)


# ---------------------------------------------------------------------------
# Newton core (shared by step_row and solve_bvp)


def _newton(residual_fn, jacobian_fn, x0, tol, max_iter, context: str):
    """Damped Newton iteration on F(x) = 0 with Armijo backtracking.

    ``jacobian_fn(x)`` must return a scipy csc matrix.  Returns
    (x, sup-norm of residual, iterations, rcond of last factored Jacobian).
    """
    x = np.array(x0, dtype=float)
    f = residual_fn(x)
    rcond = None
    for iteration in range(1, max_iter + 1):
        norm = float(np.max(np.abs(f))) if f.size else 0.0
        if norm <= tol:
            if rcond is None:
                rcond = _factor_and_rcond(jacobian_fn(x), context)[1]
            return x, norm, iteration - 1, rcond
        lu, rcond = _factor_and_rcond(jacobian_fn(x), context)
        step = -lu.solve(f)
        merit = 0.5 * float(f @ f)
        slope = -2.0 * merit
        t = 1.0
        for _ in range(40):
            x_try = x + t * step
            f_try = residual_fn(x_try)
            if 0.5 * float(f_try @ f_try) <= merit + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            raise SolverError(f"{context}: Armijo line search failed")
        x, f = x_try, f_try
    norm = float(np.max(np.abs(f))) if f.size else 0.0
    if norm <= tol:
        return x, norm, max_iter, rcond
    raise SolverError(f"{context}: Newton did not converge "
                      f"(residual {norm:.3e} after {max_iter} iterations)")


def _factor_and_rcond(jac: csc_matrix, context: str):
    """Sparse LU plus the reciprocal condition indicator; raises on singularity."""
    n = jac.shape[0]
    if n == 0:
        raise SolverError(f"{context}: empty system")
    try:
        lu = splu(jac.tocsc())
    except RuntimeError as err:
        raise SingularSystem(f"{context}: singular linearised system ({err})") from None
    norm_j = float(np.max(np.abs(jac).sum(axis=0))) if jac.nnz else 0.0
    if norm_j == 0.0:
        raise SingularSystem(f"{context}: zero Jacobian")
    if n <= 200:
        inv = lu.solve(np.eye(n))
        norm_inv = float(np.max(np.abs(inv).sum(axis=0)))
    else:
        op = LinearOperator((n, n), matvec=lambda b: lu.solve(b),
                            rmatvec=lambda b: lu.solve(b, trans="T"))
        norm_inv = float(onenormest(op))
    rcond = 1.0 / (max(1.0, norm_j) * norm_inv)
    if not np.isfinite(rcond) or rcond < RCOND_FLOOR:
        raise SingularSystem(
            f"{context}: linearised system numerically singular (rcond {rcond:.3e})",
            rcond=rcond)
    return lu, rcond


# ---------------------------------------------------------------------------
# Time stepping


def step_row(density: LagrangianDensity, mesh: QuadMesh, u_prev, u_curr,
             closure: Closure, *, row_index: int = 1, tol: float = 1e-12,
             max_iter: int = 50) -> np.ndarray:
    """Advance one time level: solve the DEL equations of the current row.

    ``u_prev``/``u_curr`` are the two known consecutive rows; the return value
    is the next row.  The system couples each new value to its left
    neighbour only (bidiagonal; cyclic for the periodic closure), and is
    explicit for densities without space-time cross terms.  ``row_index`` is
    the time index of the new row, used for callable fixed-end values.
    """
    u_prev = np.asarray(u_prev, dtype=float)
    u_curr = np.asarray(u_curr, dtype=float)
    ncols = mesh.nx + 1
    if u_prev.shape != (ncols,) or u_curr.shape != (ncols,):
        raise ValueError(f"rows must have {ncols} columns")
    closure = parse_closure(closure)
    periodic = isinstance(closure, PeriodicClosure)
    dt, dx = mesh.dt, mesh.dx

    if periodic:
        columns = list(range(ncols))

        def assemble(x):
            return x

    else:
        left, right = closure.end_values(row_index)
        columns = list(range(1, ncols - 1))

        def assemble(x):
            row = np.empty(ncols)
            row[0], row[-1] = left, right
            row[1:-1] = x
            return row

    def residual(x):
        nxt = assemble(x)
        return np.array([
            _del_residual_rows(density, dt, dx, u_prev, u_curr, nxt, i, periodic)
            for i in columns])

    def jacobian(x):
        nxt = assemble(x)
        rows, cols, vals = [], [], []
        col_of = {i: idx for idx, i in enumerate(columns)}
        for idx, i in enumerate(columns):
            ip1 = (i + 1) % ncols if periodic else i + 1
            im1 = (i - 1) % ncols if periodic else i - 1
            m_here = hess_Ld(density, _row_jet(dt, dx, u_curr, nxt, i, ip1))
            rows.append(idx)
            cols.append(idx)
            vals.append(m_here[0, 2])
            if im1 in col_of:
                m_left = hess_Ld(density, _row_jet(dt, dx, u_curr, nxt, im1, i))
                rows.append(idx)
                cols.append(col_of[im1])
                vals.append(m_left[1, 2])
        k = len(columns)
        return csc_matrix((vals, (rows, cols)), shape=(k, k))

    x0 = (2.0 * u_curr - u_prev)[columns] if columns else np.zeros(0)
    x, _, _, _ = _newton(residual, jacobian, x0, tol, max_iter, "step_row")
    return assemble(x)


def propagate(density: LagrangianDensity, mesh: QuadMesh, row0, row1,
              closure: Closure, **step_kwargs) -> DiscreteField:
    """Fill a whole field from its first two rows by repeated :func:`step_row`."""
    values = np.zeros(mesh.shape)
    values[0] = np.asarray(row0, dtype=float)
    values[1] = np.asarray(row1, dtype=float)
    for n in range(1, mesh.nt):
        values[n + 1] = step_row(density, mesh, values[n - 1], values[n],
                                 closure, row_index=n + 1, **step_kwargs)
    return DiscreteField(mesh, values)


# ---------------------------------------------------------------------------
# Boundary-value solves


@dataclass(frozen=True)
class BvpSolveReport:
    """Result of a DEL boundary-value solve."""

    field: DiscreteField
    region: Region
    residual_norm: float
    iterations: int
    rcond: float


def _stencil_triangles(node):
    """The three (triangle, slot) pairs whose action depends on ``node``."""
    n, i = node
    return ((TriangleIndex(n, i), 0),
            (TriangleIndex(n, i - 1), 1),
            (TriangleIndex(n - 1, i), 2))


def _array_jet(arr, tri: TriangleIndex, dt: float, dx: float) -> JetTriple:
    (n1, i1), (n2, i2), (n3, i3) = tri.vertices
    return JetTriple(float(arr[n1, i1]), float(arr[n2, i2]), float(arr[n3, i3]), dt, dx)


def solve_bvp(density: LagrangianDensity, mesh: QuadMesh, boundary: BoundaryData,
              *, tol: float = 1e-12, max_iter: int = 50,
              initial: DiscreteField = None) -> BvpSolveReport:
    """Solve the DEL equations on a region with Dirichlet boundary data.

    Unknowns are the strict interior nodes of ``boundary.region``; equations
    are the DEL residuals there.  Nodes outside the region keep the value of
    ``initial`` (zero by default).  Returns the filled field together with
    the final residual norm, Newton iteration count and condition indicator.
    """
    region = boundary.region
    if not region.fits(mesh):
        raise ValueError(f"region {region} does not fit mesh with shape {mesh.shape}")
    unknowns = interior_nodes(region)
    if not unknowns:
        raise ValueError(f"region {region} has no interior nodes")
    index_of = {nd: k for k, nd in enumerate(unknowns)}

    base = np.zeros(mesh.shape) if initial is None else initial.values.copy()
    for nd, val in zip(boundary.nodes, boundary.values):
        base[nd] = val
    x0 = np.full(len(unknowns), float(np.mean(boundary.values)))
    if initial is not None:
        x0 = np.array([initial[nd] for nd in unknowns])

    def fill(x):
        arr = base.copy()
        for nd, val in zip(unknowns, x):
            arr[nd] = val
        return arr

    dt, dx = mesh.dt, mesh.dx

    def residual(x):
        arr = fill(x)
        return np.array([
            _del_residual_rows(density, dt, dx, arr[n - 1], arr[n], arr[n + 1],
                               i, False)
            for (n, i) in unknowns])

    def jacobian(x):
        arr = fill(x)
        rows, cols, vals = [], [], []
        for row_idx, node in enumerate(unknowns):
            for tri, eq_slot in _stencil_triangles(node):
                m = hess_Ld(density, _array_jet(arr, tri, dt, dx))
                for vtx_slot, vtx in enumerate(tri.vertices):
                    col_idx = index_of.get(vtx)
                    if col_idx is not None:
                        rows.append(row_idx)
                        cols.append(col_idx)
                        vals.append(m[eq_slot, vtx_slot])
        k = len(unknowns)
        return csc_matrix((vals, (rows, cols)), shape=(k, k))

    x, norm, iters, rcond = _newton(residual, jacobian, x0, tol, max_iter, "solve_bvp")
    return BvpSolveReport(field=DiscreteField(mesh, fill(x)), region=region,
                          residual_norm=norm, iterations=iters, rcond=rcond)


def tangent_solve(density: LagrangianDensity, field: DiscreteField, region: Region,
                  tangent_boundary: BoundaryData, *, base_tol: float = 1e-8
                  ) -> DiscreteField:
    """Solve the linearised DEL equations for a first variation.

    ``field`` must satisfy the DEL equations at the interior nodes of
    ``region`` (checked against ``base_tol``).  The returned field carries the
    prescribed boundary tangent, solves the linearisation at the interior
    nodes and is zero outside the region.
    """
    mesh = field.mesh
    if tangent_boundary.region != region:
        raise ValueError("tangent boundary data is for a different region")
    if not region.fits(mesh):
        raise ValueError(f"region {region} does not fit mesh with shape {mesh.shape}")
    unknowns = interior_nodes(region)
    if not unknowns:
        raise ValueError(f"region {region} has no interior nodes")
    for (n, i) in unknowns:
        res = del_residual(density, field, n, i)
        if abs(res) > base_tol:
            raise ValueError(
                f"base field does not satisfy the DEL equations at ({n}, {i}): "
                f"residual {res:.3e} exceeds {base_tol:.1e}")

    index_of = {nd: k for k, nd in enumerate(unknowns)}
    tau = np.zeros(mesh.shape)
    for nd, val in zip(tangent_boundary.nodes, tangent_boundary.values):
        tau[nd] = val

    rows, cols, vals = [], [], []
    rhs = np.zeros(len(unknowns))
    dt, dx = mesh.dt, mesh.dx
    for row_idx, node in enumerate(unknowns):
        for tri, eq_slot in _stencil_triangles(node):
            m = hess_Ld(density, _array_jet(field.values, tri, dt, dx))
            for vtx_slot, vtx in enumerate(tri.vertices):
                col_idx = index_of.get(vtx)
                if col_idx is not None:
                    rows.append(row_idx)
                    cols.append(col_idx)
                    vals.append(m[eq_slot, vtx_slot])
                else:
                    rhs[row_idx] -= m[eq_slot, vtx_slot] * tau[vtx]
    k = len(unknowns)
    jac = csc_matrix((vals, (rows, cols)), shape=(k, k))
    lu, _ = _factor_and_rcond(jac, "tangent_solve")
    x = lu.solve(rhs)
    for nd, val in zip(unknowns, x):
        tau[nd] = val
    return DiscreteField(mesh, tau)
