"""Cone-adapted compactly supported shearlet system on the pixel grid.

The generator is separable, psi(x) = psi1(x1) psi2(x2), built from centered
cubic B-splines:

    psi1(t) = B3''(t / sigma1)   directional factor, two vanishing moments,
    psi2(t) = B3(t / sigma2)     smooth bump,
    phi(x)  = B3(x1/sigma0) B3(x2/sigma0)   coarse-scale generator.

Scale j and shear k act through the parabolic matrix A_j = diag(2^j, 2^{j/2})
and S_k = [[1, k], [0, 1]]; the second cone (iota = -1) swaps the axis roles,
which on the grid is a plain transpose of the first-cone filter.  Filters are
exact point evaluations of the sheared tensor spline at pixel offsets, with
the shear bound |k| <= 2^{ceil(j/2)} per cone.

Analysis computes one coefficient plane per (j, k, iota) over the full pixel
translate lattice by FFT correlation; synthesis is the exact adjoint (plain
convolution back-projection, no normalization).  Filter construction and the
per-plane transforms are independent across planes and safe to run
concurrently; the bank is immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid

_SUPPORT_TOL = 1e-12


def bspline3(t: np.ndarray) -> np.ndarray:
    """Centered cubic B-spline, support [-2, 2], C^2."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    out = np.zeros_like(t)
    inner = t <= 1.0
    out[inner] = (4.0 - 6.0 * t[inner] ** 2 + 3.0 * t[inner] ** 3) / 6.0
    outer = (t > 1.0) & (t < 2.0)
    out[outer] = (2.0 - t[outer]) ** 3 / 6.0
    return out


def bspline3_dd(t: np.ndarray) -> np.ndarray:
    """Second derivative of the centered cubic B-spline (piecewise linear,
    two vanishing moments)."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    out = np.zeros_like(t)
    inner = t <= 1.0
    out[inner] = 3.0 * t[inner] - 2.0
    outer = (t > 1.0) & (t < 2.0)
    out[outer] = 2.0 - t[outer]
    return out


def bspline2_d(t: np.ndarray) -> np.ndarray:
    """First derivative of the centered quadratic B-spline, support
    [-1.5, 1.5], one vanishing moment.

    Its Fourier magnitude 2 pi |xi| sinc^3(xi) has a much broader octave
    response than higher-order derivatives, which keeps the dyadic scale
    stack free of deep inter-scale dips (this sets the empirical lower frame
    bound of the assembled system).
    """
    s = np.sign(np.asarray(t, dtype=np.float64))
    t = np.abs(np.asarray(t, dtype=np.float64))
    out = np.zeros_like(t)
    inner = t <= 0.5
    out[inner] = -2.0 * t[inner]
    outer = (t > 0.5) & (t < 1.5)
    out[outer] = t[outer] - 1.5
    return out * s


def scaling_matrix(j: int) -> np.ndarray:
    """Parabolic scaling A_j = diag(2^j, 2^{j/2})."""
    return np.diag([2.0**j, 2.0 ** (j / 2.0)])


def co_scaling_matrix(j: int) -> np.ndarray:
    """Second-cone scaling diag(2^{j/2}, 2^j)."""
    return np.diag([2.0 ** (j / 2.0), 2.0**j])


def shear_matrix(k: int) -> np.ndarray:
    return np.array([[1.0, float(k)], [0.0, 1.0]])


def shear_range(j: int) -> int:
    """Largest admissible |k| at scale j."""
    return 2 ** ((j + 1) // 2)  # 2^{ceil(j/2)}


@dataclass(frozen=True)
class ShearletIndex:
    j: int
    k: int
    iota: int
    m: tuple[float, float] | None = None  # None: plane-level index


@dataclass(frozen=True)
class ShearletGenerator:
    """Separable spline generator and its declared frequency-decay exponents.

    The directional factor is the quadratic-spline derivative (one vanishing
    moment, broad octave response); the transverse factor and the coarse
    generator are cubic B-splines.
    """

    sigma1: float = 1.0 / 8.0  # directional-factor width (support half-width 3/16)
    sigma2: float = 3.0 / 32.0  # bump width (support half-width 3/16)
    sigma0: float = 3.0 / 32.0  # coarse-generator width
    c1: float = 1.0  # translate sampling constants, in pixels
    c2: float = 1.0
    alpha_decl: float = 1.0
    beta_decl: float = 2.0

    def psi1(self, t):
        return bspline2_d(np.asarray(t) / self.sigma1)

    def psi2(self, t):
        return bspline3(np.asarray(t) / self.sigma2)

    def phi1d(self, t):
        return bspline3(np.asarray(t) / self.sigma0)

    def psi1_half_width(self) -> float:
        return 1.5 * self.sigma1

    def psi2_half_width(self) -> float:
        return 2.0 * self.sigma2

    def psi1_hat(self, xi):
        """|FT of psi1| in closed form: 2 pi sigma1^2 |xi| sinc^3(sigma1 xi)."""
        u = self.sigma1 * np.asarray(xi, dtype=np.float64)
        return self.sigma1 * 2.0 * np.pi * np.abs(u) * np.abs(np.sinc(u)) ** 3

    def psi2_hat(self, xi):
        u = self.sigma2 * np.asarray(xi, dtype=np.float64)
        return self.sigma2 * np.sinc(u) ** 4

    def norm_psi(self) -> float:
        """L2 norm of the separable generator (quadrature)."""
        return float(
            np.sqrt(
                _quad_sq(self.psi1, self.psi1_half_width())
                * _quad_sq(self.psi2, self.psi2_half_width())
            )
        )

    def norm_phi(self) -> float:
        return float(_quad_sq(self.phi1d, 2 * self.sigma0))

    def base_support_radius(self) -> float:
        """Radius of the smallest centered ball containing supp(psi); the strip
        constant is q_sh = 2 * this value (supp psi_{j,k=0} in B_{2^{-j/2} q/2})."""
        return float(np.hypot(self.psi1_half_width(), self.psi2_half_width()))


def _quad_sq(fn, half_width: float, npts: int = 1 << 16) -> float:
    t = np.linspace(-half_width, half_width, npts)
    return float(np.trapezoid(fn(t) ** 2, t))


def lambda_index_set(max_scale: int, n: int) -> list[ShearletIndex]:
    """Plane-level index enumeration: the coarse layer plus both cones up to
    the given scale.  The translate lattice (all pixels) is implicit."""
    if 2**max_scale > n:
        raise ValueError(f"scale {max_scale} exceeds grid: need 2^J <= n={n}")
    out = [ShearletIndex(0, 0, 0)]
    for iota in (1, -1):
        for j in range(0, max_scale + 1):
            for k in range(-shear_range(j), shear_range(j) + 1):
                out.append(ShearletIndex(j, k, iota))
    return out


@dataclass(frozen=True)
class FilterInfo:
    j: int
    k: int
    iota: int
    box: tuple[int, int, int, int]  # signed pixel bounds (p_lo, p_hi, q_lo, q_hi)
    radius: float  # physical support radius around the translate
    norm_drift: float  # |1 - discrete/analytic norm| before correction


def digital_filter(j: int, k: int, iota: int, gen: ShearletGenerator, n: int):
    """Sample one shearlet filter on signed pixel offsets.

    Returns (filt, info) with filt an (n, n) array holding the element
    centered at pixel (0, 0) in circular coordinates.  Directional filters get
    an exact zero discrete mean (inherited vanishing moment along the short
    axis) and every filter is rescaled so its discrete L2 norm equals the
    analytic L2 norm of the generator.

    iota = 2 requests the Nyquist completion atom: the unit-norm 5-point
    highpass stencil, whose symbol 4 - 2cos(w1) - 2cos(w2) peaks over the
    whole Nyquist rim (axes and corner).  Sampled spline filters of any scale
    respond weakly there, so without this atom the digital system's lower
    frame bound decays under refinement; the continuum theory has no analog
    (the rim recedes to infinity), making the cap pure digitization plumbing.
    """
    if iota == 2:
        w = (n / np.sqrt(20.0)) * np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])
        filt = np.zeros((n, n))
        filt[np.ix_([-1, 0, 1], [-1, 0, 1])] = w
        info = FilterInfo(j, 0, 2, (-1, 1, -1, 1), float(np.hypot(1, 1) / n), 0.0)
        return filt, info
    if iota == 0:
        if j != 0 or k != 0:
            raise ValueError("coarse layer carries only j=0, k=0")
        half = 2.0 * gen.sigma0
        ext = int(np.ceil(half * n))
        p = np.arange(-ext, ext + 1)
        x = p / n
        w = np.outer(gen.phi1d(x), gen.phi1d(x))
        target = gen.norm_phi()
    else:
        half1 = 2.0**-j * (gen.psi1_half_width() + abs(k) * gen.psi2_half_width())
        half2 = 2.0 ** (-j / 2.0) * gen.psi2_half_width()
        if iota == -1:
            half1, half2 = half2, half1
        e1 = int(np.ceil(half1 * n))
        e2 = int(np.ceil(half2 * n))
        p = np.arange(-e1, e1 + 1)
        q = np.arange(-e2, e2 + 1)
        x1 = p[:, None] / n
        x2 = q[None, :] / n
        if iota == -1:
            x1, x2 = x2.T, x1.T  # transpose role swap: T S_k^T A~_j = S_k A_j T
        u1 = 2.0**j * x1 + k * 2.0 ** (j / 2.0) * x2
        u2 = 2.0 ** (j / 2.0) * x2
        w = 2.0 ** (0.75 * j) * gen.psi1(u1) * gen.psi2(u2)
        if iota == -1:
            w = w.T
        inside = (np.abs(u1) < gen.psi1_half_width()) & (np.abs(u2) < gen.psi2_half_width())
        if iota == -1:
            inside = inside.T
        if inside.any():
            w[inside] -= w.sum() / inside.sum()
        target = gen.norm_psi()

    if w.shape[0] > n or w.shape[1] > n:
        raise ValueError(
            f"filter (j={j}, k={k}, iota={iota}) spans {w.shape} and would wrap on an {n} grid"
        )
    disc = np.linalg.norm(w) / n
    if disc == 0.0:
        raise ValueError(f"filter (j={j}, k={k}, iota={iota}) under-resolved: all taps vanish")
    drift = abs(1.0 - disc / target)
    w = w * (target / disc)

    nz = np.abs(w) > _SUPPORT_TOL * np.abs(w).max()
    rows = np.nonzero(nz.any(axis=1))[0]
    cols = np.nonzero(nz.any(axis=0))[0]
    ctr = (w.shape[0] // 2, w.shape[1] // 2)
    box = (int(rows[0] - ctr[0]), int(rows[-1] - ctr[0]), int(cols[0] - ctr[1]), int(cols[-1] - ctr[1]))
    ii, kk = np.nonzero(nz)
    radius = float(np.hypot(ii - ctr[0], kk - ctr[1]).max() / n)

    filt = np.zeros((n, n))
    pr = (np.arange(w.shape[0]) - ctr[0]) % n
    qr = (np.arange(w.shape[1]) - ctr[1]) % n
    filt[pr[:, None], qr[None, :]] = w
    info = FilterInfo(j, k, iota, box, radius, drift)
    return filt, info


def support_radius(idx: ShearletIndex, gen: ShearletGenerator, n: int) -> float:
    """Measured physical support radius of the filter at a plane index."""
    _, info = digital_filter(idx.j, idx.k, idx.iota, gen, n)
    return info.radius


class ShearletBank:
    """All filters of the system up to a maximal scale, with cached FFTs.

    ``analysis`` maps an image to the (planes, n, n) stack of L2 inner
    products against every pixel translate; ``synthesis`` is the exact adjoint
    with respect to the discrete L2 product on images and plain ell2 on
    coefficient stacks.
    """

    def __init__(self, gen: ShearletGenerator, max_scale: int, n: int, nyquist_cap: bool = True):
        self.gen = gen
        self.max_scale = int(max_scale)
        self.n = int(n)
        self.planes: list[FilterInfo] = []
        hats = []
        indices = lambda_index_set(self.max_scale, self.n)
        if nyquist_cap:
            indices = indices + [ShearletIndex(self.max_scale + 1, 0, 2)]
        for idx in indices:
            filt, info = digital_filter(idx.j, idx.k, idx.iota, gen, self.n)
            self.planes.append(info)
            hats.append(np.fft.rfft2(filt))
        self.filter_hats = np.stack(hats)

    @property
    def n_planes(self) -> int:
        return len(self.planes)

    def spatial_filter(self, p: int) -> np.ndarray:
        info = self.planes[p]
        filt, _ = digital_filter(info.j, info.k, info.iota, self.gen, self.n)
        return filt

    def analysis(self, f: np.ndarray) -> np.ndarray:
        if f.shape != (self.n, self.n):
            raise ValueError(f"expected shape {(self.n, self.n)}, got {f.shape}")
        fhat = np.fft.rfft2(f)
        planes = np.fft.irfft2(fhat[None, :, :] * np.conj(self.filter_hats), s=(self.n, self.n))
        planes /= float(self.n * self.n)
        return planes

    def synthesis(self, coeffs: np.ndarray) -> np.ndarray:
        if coeffs.shape != (self.n_planes, self.n, self.n):
            raise ValueError(f"expected shape {(self.n_planes, self.n, self.n)}, got {coeffs.shape}")
        chat = np.fft.rfft2(coeffs, s=(self.n, self.n))
        acc = np.einsum("pij,pij->ij", chat, self.filter_hats)
        return np.fft.irfft2(acc, s=(self.n, self.n))

    def interior_mask(self, p: int, margin_px: int = 1) -> np.ndarray:
        """Boolean plane of translates whose measured support box stays at
        least margin_px cells away from every wall."""
        lo1, hi1, lo2, hi2 = self.planes[p].box
        n = self.n
        m1 = np.zeros(n, dtype=bool)
        m2 = np.zeros(n, dtype=bool)
        a1, b1 = margin_px - lo1, n - 1 - margin_px - hi1
        a2, b2 = margin_px - lo2, n - 1 - margin_px - hi2
        if b1 >= a1:
            m1[max(a1, 0) : b1 + 1] = True
        if b2 >= a2:
            m2[max(a2, 0) : b2 + 1] = True
        return m1[:, None] & m2[None, :]


@dataclass
class DecayEnvelopeReport:
    alpha_fit: float
    beta_fit_psi1: float
    beta_fit_psi2: float
    alpha_declared: float
    beta_declared: float
    envelope_constant: float
    satisfied: bool


def decay_envelope_check(gen: ShearletGenerator, n_freq: int = 2048, xi_max: float = 512.0) -> DecayEnvelopeReport:
    """Fit the frequency-envelope exponents of the generator factors.

    alpha is the low-frequency slope of |psi1_hat| (vanishing-moment order),
    the betas are the high-frequency decay slopes of the two factors.  The
    report carries the smallest constant bounding |psi_hat| by the declared
    separable envelope over the scanned frequencies.
    """
    xi_lo = np.geomspace(1e-3, 1.0 / (4 * np.pi * gen.sigma1), n_freq // 4)
    a_lo = np.polyfit(np.log(xi_lo), np.log(gen.psi1_hat(xi_lo) + 1e-300), 1)[0]
    xi_hi = np.geomspace(4.0 / gen.sigma1, xi_max / gen.sigma1, n_freq)
    env1 = _upper_envelope(xi_hi, gen.psi1_hat(xi_hi))
    b1 = -np.polyfit(np.log(xi_hi[env1]), np.log(gen.psi1_hat(xi_hi[env1]) + 1e-300), 1)[0]
    xi_hi2 = np.geomspace(4.0 / gen.sigma2, xi_max / gen.sigma2, n_freq)
    env2 = _upper_envelope(xi_hi2, gen.psi2_hat(xi_hi2))
    b2 = -np.polyfit(np.log(xi_hi2[env2]), np.log(gen.psi2_hat(xi_hi2[env2]) + 1e-300), 1)[0]

    xi = np.geomspace(1e-3, xi_max / min(gen.sigma1, gen.sigma2), n_freq)
    bound1 = np.minimum(1.0, xi**gen.alpha_decl) / np.maximum(1.0, xi**gen.beta_decl)
    c1 = np.max(gen.psi1_hat(xi) / bound1)
    bound2 = 1.0 / np.maximum(1.0, xi**gen.beta_decl)
    c2 = np.max(gen.psi2_hat(xi) / bound2)
    const = float(max(c1, c2))
    ok = bool(np.isfinite(const)) and a_lo >= gen.alpha_decl - 0.25 and min(b1, b2) >= gen.beta_decl - 0.25
    return DecayEnvelopeReport(float(a_lo), float(b1), float(b2), gen.alpha_decl, gen.beta_decl, const, ok)


def _upper_envelope(xi: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Select local upper-envelope points (sinc oscillation peaks) for tail fits."""
    keep = np.zeros(len(xi), dtype=bool)
    nseg = 24
    edges = np.geomspace(xi[0], xi[-1], nseg + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        seg = (xi >= a) & (xi <= b)
        if seg.any():
            keep[np.nonzero(seg)[0][np.argmax(vals[seg])]] = True
    return keep
