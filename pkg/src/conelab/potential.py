"""Conical potentials V(x) = V_S(x) + ||g(x)|| F(x) and their singular-set
geometry.

The smooth parts V_S, F and the constraint map g are expression-tree fields.
The norm kink is applied exactly (no smoothing), so V is continuous across
the singular set Lambda = {g = 0} while its gradient is defined only away
from it.  On Lambda the relevant linear-algebra objects (constraint
Jacobian, tangent projector, normal force, cone shape operator) are exposed
through :class:`SingularPointGeometry`.

Normal-space conventions: vectors normal to Lambda are represented in the
ambient R^d (orthogonal complement of ker grad_g); directions on the unit
normal sphere are represented in constraint coordinates w = g(x) in R^p, so
the shape operator F(sigma) grad_g(sigma)^T maps sphere directions to
ambient normal vectors.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import NotOnSingularSet, ParseError, RankDeficient, SingularEvaluation
from .expressions import ScalarField

__all__ = [
    "SINGULAR_TOL",
    "ScalarField",
    "ConstraintMap",
    "ConicalPotential",
    "SingularPointGeometry",
    "singular_geometry",
]

# Absolute tolerance for membership in Lambda; well below every grid and ODE
# scale used by the experiments.
SINGULAR_TOL = 1e-10


class ConstraintMap:
    """Map g : R^d -> R^p whose zero set is the singular manifold."""

    def __init__(self, components: list[ScalarField]):
        if not components:
            raise ParseError("constraint map needs at least one component")
        dims = {c.dimension for c in components}
        if len(dims) != 1:
            raise ParseError("constraint components disagree on dimension")
        self.components = list(components)
        self.dimension = components[0].dimension
        self.codim = len(components)
        if self.codim > self.dimension:
            raise ParseError("more constraints than coordinates")

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([c.value(x) for c in self.components], axis=-1)

    def norm(self, x) -> np.ndarray:
        return np.linalg.norm(self.value(x), axis=-1)

    def jacobian(self, x) -> np.ndarray:
        """Jacobian with shape (..., p, d)."""
        x = np.asarray(x, dtype=float)
        return np.stack([c.gradient(x) for c in self.components], axis=-2)

    def component_hessians(self, x) -> np.ndarray:
        """Hessians of the components, shape (..., p, d, d)."""
        x = np.asarray(x, dtype=float)
        return np.stack([c.hessian(x) for c in self.components], axis=-3)

    def is_linear(self, rng_probes: int = 4) -> bool:
        """True when every component Hessian vanishes identically.

        Checked exactly at a handful of sample points; expression trees give
        exact Hessians, so a linear map tests as exactly zero.
        """
        rng = np.random.default_rng(12345)
        pts = rng.normal(size=(rng_probes, self.dimension))
        return bool(np.all(self.component_hessians(pts) == 0.0))


class ConicalPotential:
    """V(x) = V_S(x) + ||g(x)|| F(x), evaluated with the exact norm kink."""

    def __init__(self, v_s: ScalarField, f: ScalarField, g: ConstraintMap):
        if not (v_s.dimension == f.dimension == g.dimension):
            raise ParseError("potential pieces disagree on dimension")
        self.v_s = v_s
        self.f = f
        self.g = g
        self.d = g.dimension
        self.p = g.codim
        # F identically zero makes the potential smooth everywhere; the
        # singular-set machinery is bypassed in that case.
        self.smooth = f.is_zero

    # -- construction from the JSON document format -----------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "ConicalPotential":
        try:
            d = int(doc["d"])
            v_s = ScalarField(doc["V_S"], d)
            f = ScalarField(doc["F"], d)
            g = ConstraintMap([ScalarField(expr, d) for expr in doc["g"]])
        except KeyError as exc:
            raise ParseError(f"potential document missing field {exc}") from exc
        return cls(v_s, f, g)

    @classmethod
    def from_json(cls, text: str) -> "ConicalPotential":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "V_S": self.v_s.expression,
            "F": self.f.expression,
            "g": [c.expression for c in self.g.components],
            "d": self.d,
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    # -- evaluation --------------------------------------------------------

    def eval_V(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.smooth:
            return self.v_s.value(x)
        return self.v_s.value(x) + self.g.norm(x) * self.f.value(x)

    def grad_V(self, x) -> np.ndarray:
        """grad V_S + ||g|| grad F + F J^T g / ||g||; undefined on Lambda."""
        x = np.asarray(x, dtype=float)
        if self.smooth:
            return self.v_s.gradient(x)
        gval = self.g.value(x)
        gnorm = np.linalg.norm(gval, axis=-1)
        if np.any(gnorm <= SINGULAR_TOL):
            raise SingularEvaluation(
                "gradient requested within singular tolerance of the cone edge"
            )
        jac = self.g.jacobian(x)
        jt_g = np.einsum("...pd,...p->...d", jac, gval)
        fval, fgrad = self.f.value_gradient(x)
        return (
            self.v_s.gradient(x)
            + gnorm[..., None] * fgrad
            + (fval / gnorm)[..., None] * jt_g
        )

    def hessian_V(self, x) -> np.ndarray:
        """Hessian away from Lambda (product + chain rule on ||g|| F)."""
        x = np.asarray(x, dtype=float)
        if self.smooth:
            return self.v_s.hessian(x)
        gval = self.g.value(x)
        gnorm = np.linalg.norm(gval, axis=-1)
        if np.any(gnorm <= SINGULAR_TOL):
            raise SingularEvaluation(
                "Hessian requested within singular tolerance of the cone edge"
            )
        jac = self.g.jacobian(x)
        jt_g = np.einsum("...pd,...p->...d", jac, gval)
        grad_norm = jt_g / gnorm[..., None]
        hess_comp = self.g.component_hessians(x)
        jtj = np.einsum("...pd,...pe->...de", jac, jac)
        g_dot_hess = np.einsum("...p,...pde->...de", gval, hess_comp)
        hess_norm = (
            jtj + g_dot_hess - grad_norm[..., :, None] * grad_norm[..., None, :]
        ) / gnorm[..., None, None]
        fval, fgrad = self.f.value_gradient(x)
        fhess = self.f.hessian(x)
        cross = grad_norm[..., :, None] * fgrad[..., None, :]
        return (
            self.v_s.hessian(x)
            + gnorm[..., None, None] * fhess
            + cross
            + np.swapaxes(cross, -1, -2)
            + fval[..., None, None] * hess_norm
        )

    def on_singular_set(self, x) -> bool:
        return bool(np.all(self.g.norm(np.asarray(x, dtype=float)) <= SINGULAR_TOL))

    def __repr__(self):
        return (
            f"ConicalPotential(V_S={self.v_s.expression!r}, F={self.f.expression!r}, "
            f"g={[c.expression for c in self.g.components]!r}, d={self.d})"
        )


@dataclass(frozen=True)
class SingularPointGeometry:
    """Pointwise linear algebra of the cone at sigma in Lambda.

    ``tangent_projector`` projects onto ker grad_g(sigma) (the cotangent
    fibre); ``normal_grad_vs`` is the normal component of grad V_S in the
    ambient representation; ``d_g`` is the p x p Gram matrix
    grad_g grad_g^T; ``op_norm_f_tgradg`` is the largest singular value of
    the shape operator F(sigma) grad_g(sigma)^T acting from sphere
    directions (R^p) into the ambient normal space.
    """

    sigma: np.ndarray
    grad_g: np.ndarray
    tangent_projector: np.ndarray
    normal_grad_vs: np.ndarray
    d_g: np.ndarray
    op_norm_f_tgradg: float
    norm_normal_grad: float
    f_sigma: float
    dim: int
    codim: int

    @property
    def pinv_grad_g(self) -> np.ndarray:
        """Right inverse of grad_g onto the ambient normal space (d x p)."""
        return self.grad_g.T @ np.linalg.inv(self.d_g)

    def normal_from_constraint(self, w: np.ndarray) -> np.ndarray:
        """Lift constraint coordinates w in R^p to the ambient normal space."""
        return self.pinv_grad_g @ np.asarray(w, dtype=float)


def singular_geometry(
    potential: ConicalPotential, sigma, rank_tol: float = 1e-9
) -> SingularPointGeometry:
    """Assemble the singular-point geometry at sigma on Lambda.

    Raises NotOnSingularSet away from Lambda and RankDeficient when the
    constraint Jacobian falls below full rank.
    """
    sigma = np.asarray(sigma, dtype=float)
    if not potential.on_singular_set(sigma):
        raise NotOnSingularSet(f"||g(sigma)|| = {potential.g.norm(sigma):.3e} > tol")
    jac = potential.g.jacobian(sigma)
    svals = np.linalg.svd(jac, compute_uv=False)
    if svals[-1] <= rank_tol:
        raise RankDeficient(f"smallest singular value {svals[-1]:.3e} of grad_g")
    d = potential.d
    d_g = jac @ jac.T
    projector = np.eye(d) - jac.T @ np.linalg.solve(d_g, jac)
    grad_vs = potential.v_s.gradient(sigma)
    normal_grad = grad_vs - projector @ grad_vs
    f_sigma = float(potential.f.value(sigma))
    shape_op = f_sigma * jac.T  # d x p, columns indexed by sphere coords
    op_norm = float(np.linalg.svd(shape_op, compute_uv=False)[0]) if f_sigma else 0.0
    return SingularPointGeometry(
        sigma=sigma,
        grad_g=jac,
        tangent_projector=projector,
        normal_grad_vs=normal_grad,
        d_g=d_g,
        op_norm_f_tgradg=op_norm,
        norm_normal_grad=float(np.linalg.norm(normal_grad)),
        f_sigma=f_sigma,
        dim=d,
        codim=potential.p,
    )
