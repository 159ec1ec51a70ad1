"""Cartoon-like test functions and the Poisson benchmark data.

A cartoon-like function is f1 + chi_B * f2 with C^2 smooth parts and a
star-shaped jump region B whose boundary curve has bounded curvature.  The
region is described in polar form around its center,

    rho(theta) = r0 * (1 + sum_i eps_i cos(i theta + phi_i)),

and membership is decided exactly at every cell center (no antialiasing).

The benchmark problem is -laplace(u) = f on (0,1)^2 with homogeneous
Dirichlet data, f = D1 g + D2 g for the disc indicator g = chi_{B_{1/6}(0.5)};
the solution u has cartoon-like first derivatives.  The reference solution is
a sine-spectral solve at higher resolution, exact (to roundoff) for the
mirror-ghost discrete Laplacian at that resolution, then restricted by cell
averaging.  All generators here are pure and stateless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import grid


@dataclass(frozen=True)
class CartoonSpec:
    """Star-shaped jump region plus two smooth parts.

    The smooth parts are closed-form expressions chosen by name so that specs
    stay serializable: "zero", "one", or "bump" (a C^infinity bump of unit
    C^2 size supported in the square).
    """

    center: tuple[float, float] = (0.5, 0.5)
    r0: float = 1.0 / 6.0
    eps: tuple[float, ...] = ()
    harmonics: tuple[int, ...] = ()
    phases: tuple[float, ...] = ()
    curvature_bound: float | None = None  # declared nu; None skips the check
    f1: str = "zero"
    f2: str = "one"
    max_boundary_crossings: int = 0

    def __post_init__(self):
        if not (len(self.eps) == len(self.harmonics) == len(self.phases)):
            raise ValueError("eps, harmonics, phases must have equal lengths")
        th = np.linspace(0.0, 2.0 * np.pi, 4096)
        if np.any(self.radius(th) <= 0.0):
            raise ValueError("radius function must stay positive")

    def radius(self, theta: np.ndarray) -> np.ndarray:
        rho = np.ones_like(theta)
        for e, i, p in zip(self.eps, self.harmonics, self.phases):
            rho = rho + e * np.cos(i * theta + p)
        return self.r0 * rho

    def radius_d1(self, theta: np.ndarray) -> np.ndarray:
        out = np.zeros_like(theta)
        for e, i, p in zip(self.eps, self.harmonics, self.phases):
            out = out - e * i * np.sin(i * theta + p)
        return self.r0 * out

    def radius_d2(self, theta: np.ndarray) -> np.ndarray:
        out = np.zeros_like(theta)
        for e, i, p in zip(self.eps, self.harmonics, self.phases):
            out = out - e * i * i * np.cos(i * theta + p)
        return self.r0 * out

    def to_json(self) -> str:
        return json.dumps(
            {
                "center": list(self.center),
                "r0": self.r0,
                "eps": list(self.eps),
                "harmonics": list(self.harmonics),
                "phases": list(self.phases),
                "curvature_bound": self.curvature_bound,
                "f1": self.f1,
                "f2": self.f2,
                "max_boundary_crossings": self.max_boundary_crossings,
            }
        )

    @staticmethod
    def from_json(text: str) -> "CartoonSpec":
        d = json.loads(text)
        return CartoonSpec(
            center=tuple(d["center"]),
            r0=d["r0"],
            eps=tuple(d.get("eps", ())),
            harmonics=tuple(d.get("harmonics", ())),
            phases=tuple(d.get("phases", ())),
            curvature_bound=d.get("curvature_bound"),
            f1=d.get("f1", "zero"),
            f2=d.get("f2", "one"),
            max_boundary_crossings=d.get("max_boundary_crossings", 0),
        )


def _smooth_part(name: str, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    if name == "zero":
        return np.zeros_like(x1)
    if name == "one":
        return np.ones_like(x1)
    if name == "bump":
        # C^infty bump on the square, normalized to unit sup norm
        r2 = (2.0 * x1 - 1.0) ** 2 + (2.0 * x2 - 1.0) ** 2
        out = np.zeros_like(x1)
        inside = r2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out
    raise ValueError(f"unknown smooth part {name!r}")


def curvature_check(spec: CartoonSpec, n_theta: int = 8192) -> float:
    """Max curvature of the polar boundary curve over a fine angle grid."""
    th = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    rho = spec.radius(th)
    d1 = spec.radius_d1(th)
    d2 = spec.radius_d2(th)
    kappa = np.abs(rho**2 + 2.0 * d1**2 - rho * d2) / (rho**2 + d1**2) ** 1.5
    return float(kappa.max())


def sample_cartoon(spec: CartoonSpec, n: int) -> np.ndarray:
    """Exact cell-center samples of f1 + chi_B f2."""
    if spec.curvature_bound is not None:
        kappa = curvature_check(spec)
        if kappa > spec.curvature_bound * (1.0 + 1e-9):
            raise ValueError(
                f"boundary curvature {kappa:.3g} exceeds declared bound {spec.curvature_bound:.3g}"
            )
    x1, x2 = grid.meshgrid(n)
    dx1 = x1 - spec.center[0]
    dx2 = x2 - spec.center[1]
    theta = np.arctan2(dx2, dx1)
    inside = np.hypot(dx1, dx2) < spec.radius(theta)
    return _smooth_part(spec.f1, x1, x2) + inside * _smooth_part(spec.f2, x1, x2)


def disc_indicator_spec(radius: float = 1.0 / 6.0, center=(0.5, 0.5)) -> CartoonSpec:
    return CartoonSpec(center=tuple(center), r0=radius)


def experiment_rhs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Benchmark data (g, f): the disc indicator and f = D1 g + D2 g."""
    g = sample_cartoon(disc_indicator_spec(), n)
    f = grid.partial_diff(g, 1) + grid.partial_diff(g, 2)
    return g, f


def dirichlet_poisson_dst(f: np.ndarray) -> np.ndarray:
    """Exact sine-spectral inverse of the mirror-ghost -laplacian."""
    n = f.shape[0]
    lam = grid.dirichlet_eigenvalues(n)
    return grid.idst2(grid.dst2(f) / (lam[:, None] + lam[None, :]))


def reference_solution(f: np.ndarray, oversample: int = 4) -> np.ndarray:
    """Reference solve of -laplace(u) = f with homogeneous Dirichlet data.

    Piecewise-constant prolongation to an oversampled grid, sine-spectral
    solve there (residual at roundoff level for the oversampled stencil),
    then cell-average restriction back to the working grid.
    """
    f = grid.validate_grid(f)
    n = f.shape[0]
    if oversample < 1 or (oversample & (oversample - 1)) != 0:
        raise ValueError("oversample must be a power of two >= 1")
    F = np.kron(f, np.ones((oversample, oversample)))
    U = dirichlet_poisson_dst(F)
    if oversample == 1:
        return U
    return U.reshape(n, oversample, n, oversample).mean(axis=(1, 3))


def oracle_residual(f: np.ndarray, oversample: int = 4) -> float:
    """Relative residual of the oversampled spectral solve (roundoff check)."""
    F = np.kron(f, np.ones((oversample, oversample)))
    U = dirichlet_poisson_dst(F)
    return float(np.linalg.norm(-grid.laplacian(U) - F) / np.linalg.norm(F))


def boundary_trace(u: np.ndarray) -> float:
    """Largest wall value of a grid function, extrapolated to the boundary.

    Linear extrapolation through the two cell rows next to each wall; for any
    function respecting the homogeneous Dirichlet condition this is O(h^2)
    small, while a function violating it shows an O(1) trace.
    """
    vals = []
    for a in (u, u.T):
        vals.append(np.abs(1.5 * a[0, :] - 0.5 * a[1, :]).max())
        vals.append(np.abs(1.5 * a[-1, :] - 0.5 * a[-2, :]).max())
    return float(max(vals))


def experiment_reference(n: int, oversample: int = 4) -> np.ndarray:
    """Reference solution of the benchmark problem, generated natively at the
    oversampled resolution (indicator and differences rebuilt there) and then
    cell-averaged down; sharper near the jump circle than prolonging the
    coarse right-hand side."""
    _, f_fine = experiment_rhs(n * oversample)
    U = dirichlet_poisson_dst(f_fine)
    if oversample == 1:
        return U
    return U.reshape(n, oversample, n, oversample).mean(axis=(1, 3))
