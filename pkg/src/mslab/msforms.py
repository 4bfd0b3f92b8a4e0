"""Boundary two-form identities on solutions and their first variations.

For a field solving the discrete Euler-Lagrange equations at an interior
node, and two first variations V, W solving the linearised equations there,
the six slot two-forms of the node's three triangles cancel:

    omega_2(tri(n, i)) + omega_3(tri(n, i))
  + omega_1(tri(n, i-1)) + omega_3(tri(n, i-1))
  + omega_1(tri(n-1, i)) + omega_2(tri(n-1, i))  =  0,

each evaluated on the restrictions of (V, W) to the triangle's vertices; the
slot owned by the centre node is the one omitted for each triangle.  This is
the discrete conservation of symplecticity in the sense of field theory.
Summing the patch identity over the interior nodes of a region gives the
region form of the statement.

For the wave density the same cancellation, divided by the cell area
dt*dx/2, is a classical discrete conservation law relating space and time
differences of the wedge quantities dv^du and dw^du; :func:`bridges_residual`
evaluates it directly and :func:`symplectic_flux` gives the conserved
per-slice flux of periodic runs.

:func:`hessian_symmetry` checks symmetry of the second derivative of the
extremal action with respect to boundary data (equality of mixed partials —
the generating-function face of the same structure), and
:func:`continuous_msff_residual` evaluates the continuum boundary integral
for exact solutions as an independent cross-check of the discrete route.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csc_matrix

from .delsolve import (_array_jet, _stencil_triangles, del_residual,
                       solve_bvp)
from .jetmesh import (BoundaryData, DiscreteField, QuadMesh, Region,
                      boundary_nodes, interior_nodes, region_triangles)
from .lagrangian import (LagrangianDensity, QuadraticDensity, hess_Ld,
                         omega_k)


@dataclass(frozen=True)
class FormResidualReport:
    """Outcome of a form identity evaluation.

    ``residual`` is the signed sum that should vanish, ``max_term`` the
    largest single contribution (the natural scale to judge cancellation
    against) and ``n_terms`` the number of contributions summed.
    """

    residual: float
    max_term: float
    n_terms: int

    def to_json(self) -> dict:
        return {"residual": self.residual, "max_term": self.max_term,
                "n_terms": self.n_terms}


def linearized_del_residual(density: LagrangianDensity, field: DiscreteField,
                            variation: DiscreteField, n: int, i: int) -> float:
    """Residual of the linearised DEL equations at (n, i) for a variation."""
    mesh = field.mesh
    out = 0.0
    for tri, eq_slot in _stencil_triangles((n, i)):
        m = hess_Ld(density, _array_jet(field.values, tri, mesh.dt, mesh.dx))
        for vtx_slot, vtx in enumerate(tri.vertices):
            out += m[eq_slot, vtx_slot] * variation.values[vtx]
    return float(out)


def _patch_terms(density, field, v_var, w_var, n, i):
    """The six slot two-form contributions of the patch at (n, i)."""
    mesh = field.mesh
    dt, dx = mesh.dt, mesh.dx
    terms = []
    for tri, centre_slot in _stencil_triangles((n, i)):
        jet = _array_jet(field.values, tri, dt, dx)
        verts = tri.vertices
        xi = [v_var.values[vt] for vt in verts]
        eta = [w_var.values[vt] for vt in verts]
        for k in (1, 2, 3):
            if k - 1 != centre_slot:
                terms.append(omega_k(density, jet, k, xi, eta))
    return terms


def _check_patch_preconditions(density, field, v_var, w_var, n, i,
                               base_tol, variation_tol, check_variations):
    res = del_residual(density, field, n, i)
    if abs(res) > base_tol:
        raise ValueError(
            f"field does not satisfy the DEL equations at ({n}, {i}): "
            f"residual {res:.3e} exceeds {base_tol:.1e}")
    if check_variations:
        for label, var in (("V", v_var), ("W", w_var)):
            res = linearized_del_residual(density, field, var, n, i)
            if abs(res) > variation_tol:
                raise ValueError(
                    f"variation {label} does not satisfy the linearised DEL "
                    f"equations at ({n}, {i}): residual {res:.3e}")


def msff_residual_patch(density: LagrangianDensity, field: DiscreteField,
                        v_var: DiscreteField, w_var: DiscreteField,
                        n: int, i: int, *, base_tol: float = 1e-9,
                        variation_tol: float = 1e-9,
                        check_variations: bool = False) -> FormResidualReport:
    """Six-term two-form cancellation at one interior node.

    The field must solve the DEL equations at (n, i) (always checked); V and
    W must solve the linearised equations there for the identity to hold —
    pass ``check_variations=True`` to have that verified too (left off by
    default so deliberate negative controls can be evaluated).
    """
    _check_patch_preconditions(density, field, v_var, w_var, n, i,
                               base_tol, variation_tol, check_variations)
    terms = _patch_terms(density, field, v_var, w_var, n, i)
    return FormResidualReport(residual=float(sum(terms)),
                              max_term=float(max(abs(t) for t in terms)),
                              n_terms=len(terms))


def msff_residual_region(density: LagrangianDensity, field: DiscreteField,
                         v_var: DiscreteField, w_var: DiscreteField,
                         region: Region, *, base_tol: float = 1e-9,
                         variation_tol: float = 1e-9,
                         check_variations: bool = False) -> FormResidualReport:
    """Patch identity summed over the interior nodes of a region."""
    nodes = interior_nodes(region)
    if not nodes:
        raise ValueError(f"region {region} has no interior nodes")
    total = 0.0
    max_term = 0.0
    count = 0
    for (n, i) in nodes:
        _check_patch_preconditions(density, field, v_var, w_var, n, i,
                                   base_tol, variation_tol, check_variations)
        terms = _patch_terms(density, field, v_var, w_var, n, i)
        total += sum(terms)
        max_term = max(max_term, max(abs(t) for t in terms))
        count += len(terms)
    return FormResidualReport(residual=float(total), max_term=float(max_term),
                              n_terms=count)


# ---------------------------------------------------------------------------
# Wave-density conservation law (wedge-quantity form)


def _wedge_quantities(mesh: QuadMesh, v_var: DiscreteField, w_var: DiscreteField,
                      n: int, i: int, periodic: bool):
    """dv^du and dw^du of the (V, W) pair on the triangle anchored at (n, i)."""
    ncols = mesh.nx + 1
    ip1 = (i + 1) % ncols if periodic else i + 1
    av, aw = v_var.values, w_var.values
    dv_v = (av[n + 1, i] - av[n, i]) / mesh.dt
    dv_w = (aw[n + 1, i] - aw[n, i]) / mesh.dt
    dw_v = (av[n, ip1] - av[n, i]) / mesh.dx
    dw_w = (aw[n, ip1] - aw[n, i]) / mesh.dx
    dvdu = dv_v * aw[n, i] - dv_w * av[n, i]
    dwdu = dw_v * aw[n, i] - dw_w * av[n, i]
    return dvdu, dwdu


def bridges_residual(mesh: QuadMesh, v_var: DiscreteField, w_var: DiscreteField,
                     n: int, i: int, periodic: bool = False) -> float:
    """Discrete conservation-of-symplecticity residual of the wave density.

    With dv^du and dw^du the wedge quantities of the variation pair on the
    triangle anchored at a node,

        residual = (dw^du|_(n,i) - dw^du|_(n,i-1)) / dx
                 - (dv^du|_(n,i) - dv^du|_(n-1,i)) / dt.

    It vanishes identically when V and W solve the linearised wave equations
    around any field, and equals the patch two-form sum divided by the
    triangle area dt*dx/2.
    """
    ncols = mesh.nx + 1
    if periodic:
        i = i % ncols
        im1 = (i - 1) % ncols
    else:
        if not 0 < i < ncols - 1:
            raise ValueError(f"column {i} has no interior stencil")
        im1 = i - 1
    if not 1 <= n <= mesh.nt - 1:
        raise ValueError(f"row {n} has no interior stencil")
    _, dwdu_here = _wedge_quantities(mesh, v_var, w_var, n, i, periodic)
    _, dwdu_left = _wedge_quantities(mesh, v_var, w_var, n, im1, periodic)
    dvdu_here, _ = _wedge_quantities(mesh, v_var, w_var, n, i, periodic)
    dvdu_below, _ = _wedge_quantities(mesh, v_var, w_var, n - 1, i, periodic)
    return ((dwdu_here - dwdu_left) / mesh.dx
            - (dvdu_here - dvdu_below) / mesh.dt)


def symplectic_flux(mesh: QuadMesh, v_var: DiscreteField, w_var: DiscreteField,
                    n: int) -> float:
    """Per-slice symplectic flux of a periodic variation pair.

    Sums dv^du over the ring of nx+1 distinct columns between time levels n
    and n+1.  Exactly conserved in n when V and W solve the linearised wave
    equations with the periodic closure (telescoping of
    :func:`bridges_residual` around the ring).
    """
    if not 0 <= n <= mesh.nt - 1:
        raise ValueError(f"slice {n} needs rows n and n+1 inside the mesh")
    total = 0.0
    for i in range(mesh.nx + 1):
        dvdu, _ = _wedge_quantities(mesh, v_var, w_var, n, i, periodic=True)
        total += dvdu
    return float(total)


# ---------------------------------------------------------------------------
# Symmetry of the extremal-action Hessian


@dataclass(frozen=True)
class SymmetryReport:
    """Hessian of the extremal action in the boundary data, plus its defect."""

    max_asymmetry: float
    hessian: np.ndarray
    method: str
    nodes: tuple


def hessian_symmetry(density: LagrangianDensity, mesh: QuadMesh,
                     boundary: BoundaryData, *, method: str = "auto",
                     fd_step: float = 1e-4, tol: float = 1e-12,
                     max_iter: int = 50) -> SymmetryReport:
    """Second derivative of the extremal action w.r.t. boundary values.

    ``analytic`` (quadratic densities) eliminates the interior block of the
    region-wide vertex-slot Hessian (Schur complement).  ``fd`` recovers the
    same matrix by central differences of the boundary momenta around the
    given data, which probes the nonlinear solve path.  Either way the matrix
    is the mixed-partials matrix of a single scalar function, so its
    asymmetry measures only numerical error.
    """
    from .genfunc import normal_momenta

    if method == "auto":
        method = "analytic" if getattr(density, "is_quadratic", False) else "fd"
    region = boundary.region
    if not region.fits(mesh):
        raise ValueError(f"region {region} does not fit mesh with shape {mesh.shape}")
    bnodes = boundary_nodes(region)

    if method == "analytic":
        if not getattr(density, "is_quadratic", False):
            raise ValueError("analytic Hessian requires a quadratic density")
        inner = interior_nodes(region)
        order = list(bnodes) + inner
        index = {nd: k for k, nd in enumerate(order)}
        nb, ni = len(bnodes), len(inner)
        rows, cols, vals = [], [], []
        zero = np.zeros(mesh.shape)
        dt, dx = mesh.dt, mesh.dx
        for tri in region_triangles(region):
            m = hess_Ld(density, _array_jet(zero, tri, dt, dx))
            verts = tri.vertices
            for a in range(3):
                for b in range(3):
                    ia, ib = index.get(verts[a]), index.get(verts[b])
                    if ia is not None and ib is not None:
                        rows.append(ia)
                        cols.append(ib)
                        vals.append(m[a, b])
        full = csc_matrix((vals, (rows, cols)), shape=(len(order), len(order))).toarray()
        k_bb = full[:nb, :nb]
        k_bi = full[:nb, nb:]
        k_ii = full[nb:, nb:]
        if ni:
            h = k_bb - k_bi @ np.linalg.solve(k_ii, k_bi.T)
        else:
            h = k_bb
    elif method == "fd":
        nb = len(bnodes)
        h = np.zeros((nb, nb))
        for a in range(nb):
            plus = solve_bvp(density, mesh, boundary.perturbed(a, fd_step),
                             tol=tol, max_iter=max_iter)
            minus = solve_bvp(density, mesh, boundary.perturbed(a, -fd_step),
                              tol=tol, max_iter=max_iter)
            pi_plus = normal_momenta(density, plus.field, region)
            pi_minus = normal_momenta(density, minus.field, region)
            h[a, :] = (pi_plus.values - pi_minus.values) / (2.0 * fd_step)
    else:
        raise ValueError(f"unknown method {method!r}; use 'auto', 'analytic' or 'fd'")

    asym = float(np.max(np.abs(h - h.T))) if h.size else 0.0
    return SymmetryReport(max_asymmetry=asym, hessian=h, method=method,
                          nodes=tuple(bnodes))


# ---------------------------------------------------------------------------
# Continuum boundary integral (independent of the mesh machinery)


def continuous_msff_residual(density: QuadraticDensity, v_sol, w_sol, *,
                             rect=(0.0, 1.0, 0.0, 1.0),
                             n_points: int = 32) -> FormResidualReport:
    """Boundary circulation of the variation one-form for exact solutions.

    ``v_sol``/``w_sol`` are first variations given as objects with
    ``value(t, x)``, ``dt(t, x)`` and ``dx(t, x)`` methods (analytic
    derivatives; the exact-solution catalogue provides them).  The one-form

        alpha = A0 dx - A1 dt,
        A0 = Lvv*(V Wt - W Vt) + Lvw*(V Wx - W Vx),
        A1 = Lvw*(V Wt - W Vt) + Lww*(V Wx - W Vx),

    is integrated counterclockwise around the rectangle (t0, t1, x0, x1)
    with a fixed-order Gauss-Legendre rule per edge.  For solutions of the
    continuum field equations the circulation vanishes.

    Densities coupling the cell average have no continuum transcription here;
    they are checked through the discrete route only.
    """
    if not isinstance(density, QuadraticDensity):
        raise ValueError("continuum circulation supports quadratic densities only")
    if density.couples_average:
        raise ValueError("densities coupling the cell average route through "
                         "the discrete identity only")
    lvv, lvw, lww = density.vv, density.vw, density.ww
    t0, t1, x0, x1 = (float(s) for s in rect)
    if not (t1 > t0 and x1 > x0):
        raise ValueError(f"degenerate rectangle {rect!r}")

    def a_components(t, x):
        vt = v_sol.value(t, x) * w_sol.dt(t, x) - w_sol.value(t, x) * v_sol.dt(t, x)
        vx = v_sol.value(t, x) * w_sol.dx(t, x) - w_sol.value(t, x) * v_sol.dx(t, x)
        return lvv * vt + lvw * vx, lvw * vt + lww * vx

    nodes, weights = np.polynomial.legendre.leggauss(n_points)

    def line(f, lo, hi):
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        return half * sum(w * f(mid + half * s) for s, w in zip(nodes, weights))

    bottom = line(lambda x: a_components(t0, x)[0], x0, x1)
    right = line(lambda t: -a_components(t, x1)[1], t0, t1)
    top = -line(lambda x: a_components(t1, x)[0], x0, x1)
    left = line(lambda t: a_components(t, x0)[1], t0, t1)
    edges = [bottom, right, top, left]
    return FormResidualReport(residual=float(sum(edges)),
                              max_term=float(max(abs(e) for e in edges)),
                              n_terms=4)
