"""Hybrid shearlet-wavelet frame on the unit square.

The system combines two masked subsystems, each reweighted by 2^{-j s}:

* shearlets over all pixel translates whose measured support stays strictly
  inside the domain (the interior part),
* boundary wavelets whose covering ball meets the shrinking strip
  Gamma_{tau (j - t)} = { x : d(x, boundary) < q_sh 2^{-tau (j - t)} }.

Together they frame the discrete H1 space: the coarse and strip wavelets
carry the boundary, the shearlets carry the anisotropic interior content.

Boundary adaptation of the wavelets.  The construction requires wavelet
elements that vanish on the domain boundary; a transform periodized on the
n-grid does not provide that (its wall-crossing elements carry O(1) wall
values whose discrete H1 pairings grow with resolution).  The standard
digital remedy is used instead: the wavelet subsystem lives on the 2n x 2n
double-cover torus (mesh width unchanged), images enter through their odd
Dirichlet extension, and reconstructions return through the adjoint fold.
Folded elements vanish at the walls in exactly the sense of the mirror-ghost
stencil, every pairing is translation invariant on the double cover, and the
wavelet transform itself stays orthonormal.  Shearlet elements are interior
supported with a one-cell margin, so for them the n-grid realization is
already identical to the double-cover one.

Three operator flavors appear below; all are exact adjoints of each other at
the stated pairings and every identity is testable to machine precision:

``analysis(f)``      H1 coefficients, i.e. L2 analysis of f - laplacian(f)
``analysis_l2(f)``   plain L2 coefficients (the dual-pairing right-hand side)
``element_sum(c)``   weighted masked element superposition; this is the frame
                     synthesis operator, the adjoint of ``analysis`` with
                     respect to the discrete H1 product
``synthesis(c)``     (I - laplacian) applied to ``element_sum``; the adjoint
                     of ``analysis`` with respect to the L2 product

Coefficient stacks are kept dense (one plane per wavelet pyramid / shearlet
filter) with boolean masks; entries outside the masks are identically zero.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import grid
from .iterative import conjugate_gradient, largest_eigenvalue, smallest_eigenvalue
from .shearlets import ShearletBank, ShearletGenerator, ShearletIndex
from .wavelets import WaveletIndex, WaveletSystem, WaveletSystemConfig


@dataclass(frozen=True)
class FrameConfig:
    """All construction parameters of the hybrid frame."""

    sobolev_order: int = 1  # s: reweighting exponent; 1 for the Poisson solver
    strip_offset: float = 2.0  # t: larger values widen every strip
    strip_exponent: float = 0.5  # tau: strip shrink rate, must exceed 1/3
    strip_constant: float | None = None  # q_sh; None derives it from the generator
    max_scale: int | None = None  # finest shearlet scale; None: log2(n) - 3
    nyquist_cap: bool = True  # include the corner completion atom
    nyquist_cap_weight: float = 1.0
    wavelet: WaveletSystemConfig = field(default_factory=WaveletSystemConfig)
    generator: ShearletGenerator = field(default_factory=ShearletGenerator)

    def __post_init__(self):
        if self.strip_exponent <= 1.0 / 3.0:
            raise ValueError(f"strip exponent tau={self.strip_exponent} must exceed 1/3")
        if self.strip_offset <= 0.0:
            raise ValueError(f"strip offset t={self.strip_offset} must be positive")
        if self.sobolev_order < 0:
            raise ValueError("sobolev order must be >= 0")

    def resolved_q_sh(self) -> float:
        if self.strip_constant is not None:
            return float(self.strip_constant)
        return 2.0 * self.generator.base_support_radius()

    def resolved_max_scale(self, n: int) -> int:
        if self.max_scale is not None:
            return int(self.max_scale)
        return max(int(np.log2(n)) - 3, 0)


@dataclass(frozen=True)
class HybridIndex:
    """Tagged frame-element address: exactly one of the two parts is set."""

    wavelet: WaveletIndex | None = None
    shearlet: ShearletIndex | None = None

    def __post_init__(self):
        if (self.wavelet is None) == (self.shearlet is None):
            raise ValueError("hybrid index must carry exactly one sub-index")

    @property
    def kind(self) -> str:
        return "W" if self.wavelet is not None else "S"

    def scale(self) -> int:
        return self.wavelet.j if self.wavelet is not None else self.shearlet.j


def weight(idx: HybridIndex, s: float) -> float:
    """Scale reweighting 2^{-j s} of a frame element."""
    return 2.0 ** (-idx.scale() * s)


def boundary_strip_indicator(r: float, n: int, q_sh: float) -> np.ndarray:
    """0/1 grid function of the strip {d(x, boundary) < q_sh 2^{-r}}."""
    t = grid.cell_centers(n)
    d = np.minimum(t, 1.0 - t)
    dist = np.minimum(d[:, None], d[None, :])
    return (dist < q_sh * 2.0**-r).astype(np.float64)


def odd_extension(f: np.ndarray) -> np.ndarray:
    """Half-sample odd (Dirichlet) extension onto the 2n x 2n double cover."""
    n = f.shape[0]
    out = np.empty((2 * n, 2 * n))
    out[:n, :n] = f
    out[n:, :n] = -f[::-1, :]
    out[:, n:] = -out[:, :n][:, ::-1]
    return out


def fold_adjoint(u: np.ndarray) -> np.ndarray:
    """Adjoint of ``odd_extension`` at matched (1/n^2) inner products: the
    signed fold of a double-cover image back onto the working grid."""
    m = u.shape[0] // 2
    v = u[:, :m] - u[:, m:][:, ::-1]
    return v[:m, :] - v[m:, :][::-1, :]


class FoldedWavelets:
    """Boundary-adapted wavelet subsystem on the double-cover torus.

    Wraps an orthonormal :class:`WaveletSystem` of size 2n.  Scales, positions
    and support radii are reported in physical units of the unit square (the
    double cover has physical side 2, so physical scale = internal scale - 1).
    Analysis pairs the odd extension of an image with the torus elements,
    which is the same as pairing the image itself with the folded elements.
    """

    def __init__(self, cfg: WaveletSystemConfig, n: int):
        self.n = int(n)
        internal = WaveletSystemConfig(
            coarsest_scale=cfg.coarsest_scale + 1,
            finest_scale=None if cfg.finest_scale is None else cfg.finest_scale + 1,
            vanishing_moments=cfg.vanishing_moments,
            taps=cfg.taps,
        )
        self.torus = WaveletSystem(internal, 2 * self.n)

    def scale_types(self):
        return [(j - 1, ups) for j, ups in self.torus.scale_types()]

    def scale_slices(self, j_phys: int, upsilon: int):
        return self.torus.scale_slices(j_phys + 1, upsilon)

    def positions(self, j_phys: int, upsilon: int):
        m0, m1 = self.torus.positions(j_phys + 1, upsilon)
        return 2.0 * m0, 2.0 * m1  # double-cover coordinates in [0, 2)

    def support_radius(self, j_phys: int, upsilon: int) -> float:
        return 2.0 * self.torus.support_radius(j_phys + 1, upsilon)

    def support_constant(self) -> float:
        q = 0.0
        for j, ups in self.scale_types():
            q = max(q, self.support_radius(j, ups) * 2.0**j)
        return q

    def scale_layout(self, values) -> np.ndarray:
        return self.torus.scale_layout({j + 1: v for j, v in values.items()})

    def analysis(self, f: np.ndarray) -> np.ndarray:
        return self.torus.analysis(odd_extension(f))

    def synthesis(self, coeffs: np.ndarray) -> np.ndarray:
        # the 1/4 matches the double-cover inner-product normalization, making
        # this the exact adjoint of ``analysis`` at (1/n^2) products on the
        # working grid; analysis o synthesis is then the identity again
        return 0.25 * fold_adjoint(self.torus.synthesis(coeffs))

    def folded_element(self, j_phys: int, upsilon: int, a: int, b: int) -> np.ndarray:
        """Explicit n-grid sample array of one folded element (vanishes on the
        domain walls in the mirror-stencil sense)."""
        return 0.25 * fold_adjoint(self.torus.element(j_phys + 1, upsilon, a, b))


def seam_distance(x: np.ndarray) -> np.ndarray:
    """Distance of double-cover coordinates to the reflection lines (the
    images of the domain boundary)."""
    frac = np.mod(x, 1.0)
    return np.minimum(frac, 1.0 - frac)


def wavelet_mask(system: FoldedWavelets, cfg: FrameConfig) -> np.ndarray:
    """Boolean pyramid-layout mask of the strip-retained wavelet indices.

    A scale-j index survives iff the ball of radius 2^{-j}(q0 + q1) around its
    center meets Gamma_{tau (j - t)}; with an orthonormal generator the dual
    support constant q0 equals the primal q1.  On the double cover the strip
    sits around the reflection seams.
    """
    q1 = system.support_constant()
    q0 = q1
    q_sh = cfg.resolved_q_sh()
    nt = system.torus.n
    mask = np.zeros((nt, nt), dtype=bool)
    for j, ups in system.scale_types():
        reach = q_sh * 2.0 ** (-cfg.strip_exponent * (j - cfg.strip_offset))
        reach += (q0 + q1) * 2.0**-j
        m0, m1 = system.positions(j, ups)
        d0 = seam_distance(m0)
        d1 = seam_distance(m1)
        keep = np.minimum(d0[:, None], d1[None, :]) < reach
        mask[system.scale_slices(j, ups)] = keep
    return mask


def shearlet_mask(bank: ShearletBank, margin_px: int = 1) -> np.ndarray:
    """Boolean (planes, n, n) mask of translates supported strictly inside."""
    return np.stack([bank.interior_mask(p, margin_px) for p in range(bank.n_planes)])


class CoefficientVector:
    """Masked dense coefficient stacks of the hybrid system.

    Supports the vector arithmetic the iterative solvers need; ell2 inner
    products are plain sums over all stored entries.
    """

    __slots__ = ("wavelet", "shearlet")

    def __init__(self, wavelet: np.ndarray, shearlet: np.ndarray):
        self.wavelet = wavelet
        self.shearlet = shearlet

    def copy(self) -> "CoefficientVector":
        return CoefficientVector(self.wavelet.copy(), self.shearlet.copy())

    def dot(self, other: "CoefficientVector") -> float:
        return float(
            np.dot(self.wavelet.ravel(), other.wavelet.ravel())
            + np.dot(self.shearlet.ravel(), other.shearlet.ravel())
        )

    def norm(self) -> float:
        return float(np.sqrt(self.dot(self)))

    def count_nonzero(self) -> int:
        return int(np.count_nonzero(self.wavelet) + np.count_nonzero(self.shearlet))

    def max_abs(self) -> float:
        m = 0.0
        if self.wavelet.size:
            m = max(m, float(np.abs(self.wavelet).max()))
        if self.shearlet.size:
            m = max(m, float(np.abs(self.shearlet).max()))
        return m

    def threshold(self, eps: float) -> tuple["CoefficientVector", float]:
        """Zero all entries below eps in modulus; returns the compacted vector
        and the ell2 mass of the dropped part."""
        if eps < 0:
            raise ValueError("threshold must be >= 0")
        keep_w = np.abs(self.wavelet) >= eps
        keep_s = np.abs(self.shearlet) >= eps
        dropped = float(
            np.sum(self.wavelet[~keep_w] ** 2) + np.sum(self.shearlet[~keep_s] ** 2)
        )
        return (
            CoefficientVector(self.wavelet * keep_w, self.shearlet * keep_s),
            float(np.sqrt(dropped)),
        )

    def __add__(self, other):
        return CoefficientVector(self.wavelet + other.wavelet, self.shearlet + other.shearlet)

    def __sub__(self, other):
        return CoefficientVector(self.wavelet - other.wavelet, self.shearlet - other.shearlet)

    def __mul__(self, a: float):
        return CoefficientVector(self.wavelet * a, self.shearlet * a)

    __rmul__ = __mul__


@dataclass
class FrameBoundsReport:
    lower: float
    upper: float
    power_iterations: int
    inverse_iterations: int
    converged: bool


class HybridFrame:
    """Hybrid system bound to one grid size: filters, masks, weights, operators."""

    def __init__(self, cfg: FrameConfig, n: int):
        self.cfg = cfg
        self.n = int(n)
        self.wavelets = FoldedWavelets(cfg.wavelet, self.n)
        j_sh = cfg.resolved_max_scale(self.n)
        self.shearlets = ShearletBank(cfg.generator, j_sh, self.n, nyquist_cap=cfg.nyquist_cap)
        self.q_sh = cfg.resolved_q_sh()
        self.wavelet_mask = wavelet_mask(self.wavelets, cfg)
        self.shearlet_mask = shearlet_mask(self.shearlets)
        s = float(cfg.sobolev_order)
        wav_w = {j: 2.0 ** (-j * s) for j, _ in self.wavelets.scale_types()}
        self._wav_factor = self.wavelets.scale_layout(wav_w) * self.wavelet_mask
        # the corner atom is pixel-scale, so it carries the H^s weight of
        # scale log2(n); this keeps its symbol contribution n-independent
        cap_factor = cfg.nyquist_cap_weight * float(self.n) ** (-s)
        self._sh_factor = np.array(
            [
                cap_factor
                if p.iota == 2
                else 2.0 ** (-p.j * s) * self.lattice_weight(p.j)
                for p in self.shearlets.planes
            ]
        )
        self._plan = grid.ConvolutionPlan(self.n)

    def lattice_weight(self, j: int) -> float:
        """Quadrature weight of the full pixel translate lattice at scale j.

        A scale-j shearlet plane holds n^2 translates where the canonical
        M_c-lattice holds ~2^{3j/2}; weighting coefficients by the square root
        of the density ratio makes plain ell2 sums over the planes Riemann
        approximations of the canonical-lattice frame energy, so the frame
        bounds converge under grid refinement instead of growing with the
        redundancy.  The wavelet part is decimated (already canonical) and
        carries weight one.
        """
        return 2.0 ** (0.75 * j) / self.n

    # -- bookkeeping --------------------------------------------------------

    def zero_coefficients(self) -> CoefficientVector:
        nt = self.wavelets.torus.n
        return CoefficientVector(
            np.zeros((nt, nt)),
            np.zeros((self.shearlets.n_planes, self.n, self.n)),
        )

    def admissible_count(self) -> int:
        return int(self.wavelet_mask.sum() + self.shearlet_mask.sum())

    def wavelet_counts_per_scale(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for j, ups in self.wavelets.scale_types():
            sl = self.wavelets.scale_slices(j, ups)
            out[j] = out.get(j, 0) + int(self.wavelet_mask[sl].sum())
        return out

    def indices(self, nonzero_of: CoefficientVector | None = None):
        """Yield (HybridIndex, weight, value) triples over admissible entries.

        Wavelet positions are reported folded into the closed unit square.
        With a coefficient vector supplied, only its nonzero entries are
        visited.  Intended for export and diagnostics, not the hot path.
        """
        s = float(self.cfg.sobolev_order)
        fold = lambda x: 1.0 - abs(1.0 - float(np.mod(x, 2.0)))
        for j, ups in self.wavelets.scale_types():
            sl = self.wavelets.scale_slices(j, ups)
            keep = self.wavelet_mask[sl]
            vals = nonzero_of.wavelet[sl] if nonzero_of is not None else None
            m0, m1 = self.wavelets.positions(j, ups)
            r = self.wavelets.support_radius(j, ups)
            for a, b in zip(*np.nonzero(keep if vals is None else keep & (vals != 0))):
                widx = WaveletIndex(j, (fold(m0[a]), fold(m1[b])), ups, r)
                val = float(vals[a, b]) if vals is not None else 0.0
                yield HybridIndex(wavelet=widx), 2.0 ** (-j * s), val
        centers = (np.arange(self.n) + 0.5) / self.n
        for p, info in enumerate(self.shearlets.planes):
            keep = self.shearlet_mask[p]
            vals = nonzero_of.shearlet[p] if nonzero_of is not None else None
            for a, b in zip(*np.nonzero(keep if vals is None else keep & (vals != 0))):
                sidx = ShearletIndex(info.j, info.k, info.iota, (float(centers[a]), float(centers[b])))
                val = float(vals[a, b]) if vals is not None else 0.0
                yield HybridIndex(shearlet=sidx), 2.0 ** (-info.j * s), val

    # -- operators ----------------------------------------------------------

    def analysis_l2(self, f: np.ndarray) -> CoefficientVector:
        """Weighted masked L2 coefficients <f, 2^{-js} element>."""
        wav = self.wavelets.analysis(f) * self._wav_factor
        sh = self.shearlets.analysis(f)
        sh *= self._sh_factor[:, None, None]
        sh *= self.shearlet_mask
        return CoefficientVector(wav, sh)

    def analysis(self, f: np.ndarray) -> CoefficientVector:
        """H1 coefficients: L2 analysis of f - laplacian(f)."""
        return self.analysis_l2(grid.helmholtz(f))

    def element_sum(self, c: CoefficientVector) -> np.ndarray:
        """Weighted masked element superposition sum_n c_n 2^{-js} element_n.

        This is the frame synthesis operator (the H1-adjoint of ``analysis``);
        solver reconstructions live here.
        """
        wav = self.wavelets.synthesis(c.wavelet * self._wav_factor)
        sh = self.shearlets.synthesis(c.shearlet * (self._sh_factor[:, None, None] * self.shearlet_mask))
        return wav + sh

    def synthesis(self, c: CoefficientVector) -> np.ndarray:
        """L2-adjoint of ``analysis``: (I - laplacian) of the element sum."""
        return grid.helmholtz(self.element_sum(c))

    # -- frame bounds ---------------------------------------------------------

    def _sandwich(self, g: np.ndarray) -> np.ndarray:
        # (I-Lap)^{1/2} S (I-Lap)^{1/2} with S the frame operator; its spectrum
        # equals the spectrum of ||analysis(f)||^2 relative to ||f||_{H1}^2.
        h = grid.helmholtz_power(g, 0.5)
        c = self.analysis_l2(h)
        return grid.helmholtz_power(self.element_sum(c), 0.5)

    def rayleigh_quotient(self, f: np.ndarray) -> float:
        """||analysis(f)||^2 / ||f||_{H1}^2 for one test function."""
        c = self.analysis(f)
        return c.dot(c) / grid.inner_h1(f, f)

    def frame_bounds_estimate(
        self,
        seed: int = 0,
        tol: float = 1e-6,
        max_power: int = 300,
        max_inverse: int = 40,
        cg_tol: float = 1e-2,
        cg_maxiter: int = 200,
    ) -> FrameBoundsReport:
        """Empirical frame bounds on the discrete H1 space.

        The upper bound is the largest eigenvalue of the symmetrized frame
        operator by power iteration; the lower bound comes from inverse
        iteration with inner conjugate-gradient solves.  Non-convergence is
        reported through the flag, never silently truncated.
        """
        rng = np.random.default_rng(seed)
        x0 = rng.standard_normal((self.n, self.n))
        dot = lambda a, b: float(np.dot(a.ravel(), b.ravel()))
        top = largest_eigenvalue(self._sandwich, x0, dot, tol=tol, maxiter=max_power)
        bottom = smallest_eigenvalue(
            self._sandwich,
            rng.standard_normal((self.n, self.n)),
            dot,
            tol=tol,
            maxiter=max_inverse,
            cg_tol=cg_tol,
            cg_maxiter=cg_maxiter,
        )
        return FrameBoundsReport(
            lower=float(bottom.value),
            upper=float(top.value),
            power_iterations=top.iterations,
            inverse_iterations=bottom.iterations,
            converged=bool(top.converged and bottom.converged),
        )


def export_csv(frame: HybridFrame, c: CoefficientVector, path) -> None:
    """Nonzero coefficients as CSV with a W/S discriminator column."""
    with open(path, "w") as fh:
        fh.write(coefficients_csv(frame, c))


def coefficients_csv(frame: HybridFrame, c: CoefficientVector) -> str:
    buf = io.StringIO()
    buf.write("kind,j,k,iota,upsilon,m1,m2,weight,value\n")
    for idx, w, val in frame.indices(nonzero_of=c):
        if idx.kind == "W":
            wi = idx.wavelet
            buf.write(f"W,{wi.j},,,{wi.upsilon},{wi.m[0]:.17g},{wi.m[1]:.17g},{w:.17g},{val:.17g}\n")
        else:
            si = idx.shearlet
            buf.write(
                f"S,{si.j},{si.k},{si.iota},,{si.m[0]:.17g},{si.m[1]:.17g},{w:.17g},{val:.17g}\n"
            )
    return buf.getvalue()
