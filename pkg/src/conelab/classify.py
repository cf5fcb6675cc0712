"""Classification of singular points of a conical potential.

At a point sigma of the singular manifold, the directions along which
trajectories can reach or leave the singular phase-space set are the
non-zero roots rho0 of the branch equation

    rho0 = -dV_S_normal(sigma) - F(sigma) grad_g^T (grad_g rho0 / ||grad_g rho0||),

together with the "zero roots": unit sphere directions omega solving
F grad_g^T omega = -dV_S_normal, along which contact happens at most
asymptotically.  Mass sitting on the singularity must satisfy the asymmetry
(static-equilibrium) condition; its mean concentration direction D solves
F grad_g^T D = -dV_S_normal and is admissible only when ||D|| <= 1.

Conventions follow :mod:`conelab.potential`: roots rho0 are ambient R^d
vectors in the normal space; sphere directions (zero roots, measure atoms,
mean direction) are unit vectors in constraint coordinates R^p.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ZeroShapeOperator
from .potential import ConicalPotential, SingularPointGeometry, singular_geometry

__all__ = [
    "BranchRoots",
    "ManifoldFit",
    "MeanDirection",
    "SphereMeasureAtoms",
    "ClassificationReport",
    "branch_residual",
    "zero_root_residual",
    "solve_branch_equation",
    "mean_direction",
    "solve_nu_p1",
    "classify_point",
]

RESIDUAL_TOL = 1e-10
CRITICAL_TOL = 1e-9
DEDUP_TOL = 1e-6

REGIME_SUBCRITICAL = "SUBCRITICAL"
REGIME_CRITICAL = "CRITICAL"
REGIME_SUPERCRITICAL = "SUPERCRITICAL"

LABEL_NO_CONTACT = "NoContact"
LABEL_BRANCHES = "BranchesExist"
LABEL_ZERO_ONLY = "ZeroRootsOnly"
LABEL_MIXED = "MixedRoots"
LABEL_MASS_FORBIDDEN = "MassForbidden"


@dataclass
class ManifoldFit:
    """Circle fitted through a continuum of branch roots."""

    center: np.ndarray
    radius: float
    basis: np.ndarray  # d x 2, orthonormal in-plane directions
    max_residual: float

    def distance(self, rho: np.ndarray) -> float:
        rel = np.asarray(rho, dtype=float) - self.center
        in_plane = self.basis.T @ rel
        off_plane = rel - self.basis @ in_plane
        radial = np.linalg.norm(in_plane) - self.radius
        return float(np.hypot(np.linalg.norm(off_plane), radial))

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "radius": self.radius,
            "max_residual": self.max_residual,
        }


@dataclass
class BranchRoots:
    nonzero_roots: list[np.ndarray] = field(default_factory=list)
    zero_root_directions: list[np.ndarray] = field(default_factory=list)
    root_manifold_samples: list[np.ndarray] = field(default_factory=list)
    manifold_fit: ManifoldFit | None = None

    @property
    def has_nonzero(self) -> bool:
        return bool(self.nonzero_roots) or bool(self.root_manifold_samples)

    @property
    def has_zero(self) -> bool:
        return bool(self.zero_root_directions)

    @property
    def empty(self) -> bool:
        return not (self.has_nonzero or self.has_zero)

    def to_dict(self) -> dict:
        return {
            "nonzero_roots": [r.tolist() for r in self.nonzero_roots],
            "zero_root_directions": [w.tolist() for w in self.zero_root_directions],
            "root_manifold_samples": [r.tolist() for r in self.root_manifold_samples],
            "manifold_fit": None if self.manifold_fit is None else self.manifold_fit.to_dict(),
        }


@dataclass
class MeanDirection:
    vector: np.ndarray  # constraint coordinates, R^p
    feasible: bool

    def to_dict(self) -> dict:
        return {"vector": self.vector.tolist(), "feasible": self.feasible}


@dataclass
class SphereMeasureAtoms:
    atoms: list[tuple[np.ndarray, float]]
    total_mass: float

    def weight(self, direction) -> float:
        direction = np.atleast_1d(np.asarray(direction, dtype=float))
        for omega, w in self.atoms:
            if np.linalg.norm(omega - direction) < 1e-9:
                return w
        return 0.0

    def to_dict(self) -> dict:
        return {
            "atoms": [{"direction": o.tolist(), "weight": w} for o, w in self.atoms],
            "total_mass": self.total_mass,
        }


@dataclass
class ClassificationReport:
    geometry: SingularPointGeometry
    regime: str
    roots: BranchRoots
    nu_feasible: bool
    mean_dir: MeanDirection | None
    label: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sigma": self.geometry.sigma.tolist(),
            "regime": self.regime,
            "op_norm_shape": self.geometry.op_norm_f_tgradg,
            "norm_normal_force": self.geometry.norm_normal_grad,
            "roots": self.roots.to_dict(),
            "nu_feasible": bool(self.nu_feasible),
            "mean_direction": None if self.mean_dir is None else self.mean_dir.to_dict(),
            "label": self.label,
            "notes": self.notes,
        }


def branch_residual(geom: SingularPointGeometry, rho) -> float:
    """Absolute residual of a candidate non-zero root of the branch equation."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    w = geom.grad_g @ rho
    nw = np.linalg.norm(w)
    if nw == 0.0:
        return np.inf
    return float(
        np.linalg.norm(
            rho + geom.normal_grad_vs + geom.f_sigma * (geom.grad_g.T @ (w / nw))
        )
    )


def zero_root_residual(geom: SingularPointGeometry, omega) -> float:
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    return float(
        np.linalg.norm(geom.f_sigma * (geom.grad_g.T @ omega) + geom.normal_grad_vs)
    )


def _rho_from_direction(geom: SingularPointGeometry, u: np.ndarray) -> np.ndarray:
    return -(geom.normal_grad_vs + geom.f_sigma * (geom.grad_g.T @ u))


def _sphere_samples(dim: int, count: int = 256) -> np.ndarray:
    """Quasi-uniform unit directions: angles for a circle, Fibonacci for S^2."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        angles = 2 * np.pi * np.arange(count) / count
        return np.column_stack([np.cos(angles), np.sin(angles)])
    k = np.arange(count)
    z = 1.0 - 2.0 * (k + 0.5) / count
    phi = np.pi * (1 + 5**0.5) * k
    r = np.sqrt(np.maximum(0.0, 1 - z * z))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _secular_direction_solutions(dg: np.ndarray, f: float, b: np.ndarray):
    """All unit directions u with lambda u = -(b + f D_g u), lambda > 0.

    Diagonalizing D_g = Q diag(d) Q^T turns the condition into the secular
    equation sum_i beta_i^2/(lambda + f d_i)^2 = 1 with beta = Q^T b; the
    isolated solutions are its positive roots, and eigenvalue groups with
    beta = 0 contribute continuum families (spheres inside the eigenspace).

    Returns (isolated, families): isolated is a list of unit u; families a
    list of (u_fixed, radius, basis) with basis the eigenspace directions
    carrying the free sphere.
    """
    from scipy.optimize import brentq

    p = len(b)
    evals, evecs = np.linalg.eigh(dg)
    beta = evecs.T @ b
    scale = max(1.0, float(np.linalg.norm(b)), float(np.max(np.abs(f * evals))))
    lam_floor = 1e-10 * scale

    # group indices by coinciding eigenvalue
    groups: list[list[int]] = []
    for i, d in enumerate(evals):
        if groups and abs(d - evals[groups[-1][0]]) <= 1e-12 * max(1.0, abs(d)):
            groups[-1].append(i)
        else:
            groups.append([i])
    s_vals = np.array([float(np.sum(beta[g] ** 2)) for g in groups])
    d_vals = np.array([float(evals[g[0]]) for g in groups])
    active = s_vals > (1e-13 * scale) ** 2

    def phi(lam: float) -> float:
        return float(np.sum(s_vals[active] / (lam + f * d_vals[active]) ** 2) - 1.0)

    isolated: list[np.ndarray] = []
    lams: list[float] = []
    if np.any(active):
        poles = np.sort(-f * d_vals[active])
        hi = float(np.sqrt(np.sum(s_vals[active]))) + float(np.max(np.abs(poles))) + 1.0
        cuts = [lam_floor] + [pv for pv in poles if pv > lam_floor] + [2.0 * hi]
        for a, c in zip(cuts[:-1], cuts[1:]):
            if c - a <= 1e-14:
                continue
            pad = 1e-12 * max(1.0, c - a)
            grid = np.linspace(a + pad, c - pad, 512)
            vals = np.array([phi(t) for t in grid])
            for j in range(len(grid) - 1):
                if np.isfinite(vals[j]) and np.isfinite(vals[j + 1]) and vals[j] * vals[j + 1] < 0:
                    lam = brentq(phi, grid[j], grid[j + 1], xtol=1e-15, rtol=1e-15)
                    lams.append(float(lam))
    for lam in lams:
        u = np.zeros(p)
        denom_ok = True
        for g, d in zip(groups, d_vals):
            den = lam + f * d
            if abs(den) < 1e-13 * scale:
                denom_ok = False
                break
            u[g] = -beta[g] / den
        if not denom_ok:
            continue
        nu = np.linalg.norm(u)
        if abs(nu - 1.0) > 1e-8:
            continue
        isolated.append(evecs @ (u / nu))

    families: list[tuple[np.ndarray, float, np.ndarray]] = []
    for gi, g in enumerate(groups):
        if active[gi]:
            continue
        lam = -f * d_vals[gi]
        if lam <= lam_floor:
            continue
        u_fixed = np.zeros(p)
        ok = True
        for gj, (gg, d) in enumerate(zip(groups, d_vals)):
            if gj == gi:
                continue
            den = lam + f * d
            if s_vals[gj] > 0 and abs(den) < 1e-13 * scale:
                ok = False
                break
            if abs(den) > 1e-13 * scale:
                u_fixed[gg] = -beta[gg] / den
        if not ok:
            continue
        r_sq = 1.0 - float(np.sum(u_fixed**2))
        if r_sq <= 1e-12:
            continue  # empty or collapsed onto a secular root
        radius = float(np.sqrt(r_sq))
        basis = evecs[:, g]
        if len(g) == 1:
            for sign in (1.0, -1.0):
                isolated.append(evecs @ u_fixed + sign * radius * basis[:, 0])
        else:
            families.append((evecs @ u_fixed, radius, basis))
    return isolated, families


def _zero_roots(geom: SingularPointGeometry) -> list[np.ndarray]:
    f = geom.f_sigma
    if f == 0.0:
        return []
    rhs = -geom.normal_grad_vs / f
    # unique least-squares candidate; grad_g^T is injective at full rank
    u = np.linalg.solve(geom.d_g, geom.grad_g @ rhs)
    if abs(np.linalg.norm(u) - 1.0) > CRITICAL_TOL:
        return []
    u = u / np.linalg.norm(u)
    if zero_root_residual(geom, u) > RESIDUAL_TOL:
        return []
    return [u]


def solve_branch_equation(geom: SingularPointGeometry) -> BranchRoots:
    """Find all non-zero roots (isolated or continuum) and zero roots.

    Codimension one is solved in closed form by sign enumeration.  Higher
    codimension reduces, in the eigenbasis of the Gram matrix D_g, to a
    secular equation whose positive roots are the isolated branch
    directions; eigenvalue groups orthogonal to the driving vector carry
    continuum families, materialized as 256 quasi-uniform samples with an
    exact circle fit when the family is one-dimensional.
    """
    b = geom.grad_g @ geom.normal_grad_vs
    f = geom.f_sigma
    dg = geom.d_g
    roots = BranchRoots(zero_root_directions=_zero_roots(geom))

    if geom.codim == 1:
        rhos = []
        for sign in (1.0, -1.0):
            w = -(b + f * dg @ np.array([sign]))
            if np.sign(w[0]) == sign and abs(w[0]) > 1e-13:
                rho = _rho_from_direction(geom, w / abs(w[0]))
                if branch_residual(geom, rho) <= RESIDUAL_TOL:
                    rhos.append(rho)
        roots.nonzero_roots = rhos
        return roots

    isolated_u, families = _secular_direction_solutions(dg, f, b)
    rhos = []
    for u in isolated_u:
        rho = _rho_from_direction(geom, u)
        if branch_residual(geom, rho) <= RESIDUAL_TOL and all(
            np.linalg.norm(rho - q) >= DEDUP_TOL for q in rhos
        ):
            rhos.append(rho)
    roots.nonzero_roots = rhos

    for u_fixed, radius, basis in families:
        samples = []
        for s in _sphere_samples(basis.shape[1]):
            u = u_fixed + radius * (basis @ s)
            rho = _rho_from_direction(geom, u)
            if branch_residual(geom, rho) <= RESIDUAL_TOL:
                samples.append(rho)
        if not samples:
            continue
        roots.root_manifold_samples.extend(samples)
        if basis.shape[1] == 2 and roots.manifold_fit is None:
            center = _rho_from_direction(geom, u_fixed)
            ring = geom.grad_g.T @ basis  # ambient in-plane directions
            q, _ = np.linalg.qr(ring)
            arr = np.vstack(samples)
            fit = ManifoldFit(
                center=center,
                radius=float(np.linalg.norm(arr[0] - center)),
                basis=q,
                max_residual=0.0,
            )
            fit.max_residual = float(max(fit.distance(r) for r in samples))
            roots.manifold_fit = fit
    return roots


def mean_direction(geom: SingularPointGeometry) -> MeanDirection:
    """Mean concentration direction D solving F grad_g^T D = -dVs_normal;
    infeasible (measure forced to vanish) when ||D|| > 1."""
    if geom.f_sigma == 0.0:
        raise ZeroShapeOperator("cone shape operator vanishes at sigma")
    rhs = -geom.normal_grad_vs / geom.f_sigma
    d_vec = np.linalg.solve(geom.d_g, geom.grad_g @ rhs)
    return MeanDirection(
        vector=d_vec, feasible=bool(np.linalg.norm(d_vec) <= 1.0 + CRITICAL_TOL)
    )


def solve_nu_p1(geom: SingularPointGeometry, total_mass: float) -> SphereMeasureAtoms:
    """Two-atom directional measure on S^0 = {+1, -1} from the equilibrium
    condition; returns the zero measure when no nonnegative solution exists."""
    if geom.codim != 1:
        raise DimensionMismatch(f"sphere solver requires codimension 1, got {geom.codim}")
    tj = geom.grad_g.T[:, 0]
    n_hat = tj / np.linalg.norm(tj)
    s = float(n_hat @ geom.normal_grad_vs)
    shape = float(geom.f_sigma * (n_hat @ tj))
    a_plus, a_minus = s + shape, s - shape
    omega_p, omega_m = np.array([1.0]), np.array([-1.0])
    if abs(a_plus - a_minus) < 1e-15:
        if abs(a_plus) < 1e-15:
            # fully degenerate cone: any split is admissible, report symmetric
            return SphereMeasureAtoms(
                [(omega_p, total_mass / 2), (omega_m, total_mass / 2)], total_mass
            )
        return SphereMeasureAtoms([(omega_p, 0.0), (omega_m, 0.0)], 0.0)
    nu_p = -a_minus * total_mass / (a_plus - a_minus)
    nu_m = a_plus * total_mass / (a_plus - a_minus)
    if nu_p < -1e-12 * total_mass or nu_m < -1e-12 * total_mass:
        return SphereMeasureAtoms([(omega_p, 0.0), (omega_m, 0.0)], 0.0)
    nu_p, nu_m = max(nu_p, 0.0), max(nu_m, 0.0)
    return SphereMeasureAtoms([(omega_p, nu_p), (omega_m, nu_m)], nu_p + nu_m)


def classify_point(potential: ConicalPotential, sigma) -> ClassificationReport:
    """Full singular-point verdict: regime, roots, measure feasibility."""
    geom = singular_geometry(potential, sigma)
    diff = geom.op_norm_f_tgradg - geom.norm_normal_grad
    if abs(diff) <= CRITICAL_TOL:
        regime = REGIME_CRITICAL
    elif diff < 0:
        regime = REGIME_SUBCRITICAL
    else:
        regime = REGIME_SUPERCRITICAL

    roots = solve_branch_equation(geom)
    notes: list[str] = []
    try:
        mdir = mean_direction(geom)
        nu_feasible = mdir.feasible and regime != REGIME_SUBCRITICAL
    except ZeroShapeOperator:
        mdir = None
        nu_feasible = bool(geom.norm_normal_grad <= 1e-12)

    if regime == REGIME_SUBCRITICAL:
        notes.append(
            "shape operator weaker than the normal force: directional measure vanishes"
        )
        if roots.has_nonzero:
            notes.append(
                "each branch root is realized by exactly one trajectory "
                "entering or leaving the singular point"
            )
    if mdir is not None and not mdir.feasible:
        notes.append(
            "mean concentration direction exceeds unit norm: no admissible "
            "directional measure"
        )

    if roots.empty:
        label = LABEL_NO_CONTACT
    elif roots.has_nonzero and roots.has_zero:
        label = LABEL_MIXED
    elif roots.has_nonzero:
        label = LABEL_BRANCHES
    else:
        label = LABEL_ZERO_ONLY if nu_feasible else LABEL_MASS_FORBIDDEN

    return ClassificationReport(
        geometry=geom,
        regime=regime,
        roots=roots,
        nu_feasible=nu_feasible,
        mean_dir=mdir,
        label=label,
        notes=notes,
    )
