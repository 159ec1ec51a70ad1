"""Boundary wavelet system on the unit square.

Separable orthonormal wavelet basis of the n x n pixel space, built from a
compactly supported Daubechies-type generator and periodized at the dyadic
block boundaries.  Coefficients are indexed by (j, m, upsilon):

    j        dyadic scale, coarsest_scale <= j <= log2(n) - 1; a scale-j
             subband holds 2^j x 2^j coefficients (#K_j = 4^j per type),
    m        physical center of the element's support, a point in the square,
    upsilon  0 = scaling type (only at the coarsest scale), 1/2/3 = detail
             oriented along axis 2 / axis 1 / both.

Coefficients are stored packed in an (n, n) array with scale-j blocks in the
top-left 2^{j+1} x 2^{j+1} corner (the classic pyramid layout); see
``scale_slices``.  With the L2 normalization used here, ``analysis`` is an
isometry from the discrete L2 inner product onto plain ell2, and
``synthesis`` is simultaneously its adjoint and its inverse.

Images are zero outside (0,1)^2; elements whose support sticks over a wall
wrap circularly and are treated by the masks in :mod:`hswframe.hybrid` as
boundary elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import grid

_SUPPORT_TOL = 1e-12


def daubechies_taps(p: int) -> np.ndarray:
    """Lowpass taps of the orthonormal Daubechies generator with p vanishing
    moments (2p taps, minimum phase), computed by spectral factorization.

    Supported range is p in {1, ..., 6}; the shipped systems use p in
    {2, 3, 4}.
    """
    if not 1 <= p <= 6:
        raise ValueError(f"vanishing moments p={p} outside supported range 1..6")
    if p == 1:
        return np.array([1.0, 1.0]) / np.sqrt(2.0)
    # Roots of P(y) = sum_k C(p-1+k, k) y^k, then lift to z via
    # y = (2 - z - 1/z)/4 keeping the root inside the unit circle.
    pcoef = [comb(p - 1 + k, k) for k in range(p)]
    yroots = np.roots(np.array(pcoef[::-1], dtype=np.float64))
    zroots = []
    for y in yroots:
        b = -(2.0 - 4.0 * y)
        disc = np.sqrt(b * b - 4.0 + 0j)
        z1 = (-b + disc) / 2.0
        z2 = (-b - disc) / 2.0
        zroots.append(z1 if abs(z1) < 1.0 else z2)
    poly = np.poly1d([1.0])
    for z in zroots:
        poly = poly * np.poly1d([1.0, -z])
    for _ in range(p):
        poly = poly * np.poly1d([1.0, 1.0])
    h = np.real(poly.coeffs)
    h *= np.sqrt(2.0) / h.sum()
    # minimum-phase orientation: leading taps carry the energy
    front = np.sum(h[: len(h) // 2] ** 2)
    if front < 0.5:
        h = h[::-1]
    return h


def quadrature_mirror(h: np.ndarray) -> np.ndarray:
    """Highpass taps g[t] = (-1)^t h[L-1-t]."""
    L = len(h)
    return ((-1.0) ** np.arange(L)) * h[::-1]


@dataclass(frozen=True)
class WaveletSystemConfig:
    """Construction parameters of the boundary wavelet system."""

    coarsest_scale: int = 2
    finest_scale: int | None = None  # None: log2(n) - 1 at build time
    vanishing_moments: int = 2
    taps: np.ndarray | None = None  # overrides the Daubechies generator

    def lowpass(self) -> np.ndarray:
        if self.taps is not None:
            return np.asarray(self.taps, dtype=np.float64)
        return daubechies_taps(self.vanishing_moments)


@dataclass(frozen=True)
class WaveletIndex:
    j: int
    m: tuple[float, float]
    upsilon: int
    support_radius: float


def _upsample(x: np.ndarray, step: int) -> np.ndarray:
    out = np.zeros((len(x) - 1) * step + 1)
    out[::step] = x
    return out


def _split1d(x: np.ndarray, h: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # periodized polyphase step along the last axis: a[i] = sum_t h[t] x[2i+t]
    N = x.shape[-1]
    idx = (2 * np.arange(N // 2)[:, None] + np.arange(len(h))[None, :]) % N
    xs = x[..., idx]
    return xs @ h, xs @ g


def _merge1d(a: np.ndarray, d: np.ndarray, h: np.ndarray, g: np.ndarray) -> np.ndarray:
    # exact transpose of _split1d (= inverse, since the filter bank is orthonormal)
    N2 = a.shape[-1]
    N = 2 * N2
    out = np.zeros(a.shape[:-1] + (N,))
    base = 2 * np.arange(N2)
    for t in range(len(h)):
        pos = (base + t) % N
        out[..., pos] += h[t] * a + g[t] * d
    return out


class WaveletSystem:
    """Periodized orthonormal wavelet transform bound to a fixed grid size."""

    def __init__(self, cfg: WaveletSystemConfig, n: int):
        n = int(n)
        if n < 4 or (n & (n - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 4, got {n}")
        self.cfg = cfg
        self.n = n
        self.p_total = int(np.log2(n))
        self.finest = self.p_total - 1 if cfg.finest_scale is None else int(cfg.finest_scale)
        self.coarsest = int(cfg.coarsest_scale)
        if self.finest > self.p_total - 1:
            raise ValueError(
                f"finest scale {self.finest} exceeds grid resolution: need 2^(J+1) <= n={n}"
            )
        if self.coarsest > self.finest:
            raise ValueError(f"coarsest scale {self.coarsest} > finest {self.finest}")
        self.h = cfg.lowpass()
        self.g = quadrature_mirror(self.h)
        self.levels = self.p_total - self.coarsest  # cascade depth
        self._eq_lo, self._eq_hi = self._equivalent_filters()
        deep = self._eq_lo[self.levels]
        if len(deep) > n:
            raise ValueError(
                f"coarsest scale {self.coarsest} too deep for {len(self.h)} taps at n={n}: "
                f"equivalent filter length {len(deep)} exceeds the grid"
            )

    # -- construction helpers --------------------------------------------

    def _equivalent_filters(self):
        """Non-periodized equivalent filters per cascade level.

        eq_lo[l] reproduces l lowpass steps as one inner product with the raw
        signal; eq_hi[l] replaces the final step by the highpass.
        """
        eq_lo: dict[int, np.ndarray] = {0: np.array([1.0])}
        eq_hi: dict[int, np.ndarray] = {}
        for lev in range(1, self.levels + 1):
            up = 2 ** (lev - 1)
            eq_lo[lev] = np.convolve(eq_lo[lev - 1], _upsample(self.h, up))
            eq_hi[lev] = np.convolve(eq_lo[lev - 1], _upsample(self.g, up))
        return eq_lo, eq_hi

    def _axis_filter(self, j: int, upsilon: int, axis: int) -> np.ndarray:
        lev = self.p_total - j
        hi = {1: (False, True), 2: (True, False), 3: (True, True), 0: (False, False)}[upsilon]
        return self._eq_hi[lev] if hi[axis] else self._eq_lo[lev]

    def element_center_px(self, j: int, upsilon: int) -> tuple[float, float]:
        """Pixel offset of the support center relative to the block origin."""
        c0 = 0.5 * (len(self._axis_filter(j, upsilon, 0)) - 1)
        c1 = 0.5 * (len(self._axis_filter(j, upsilon, 1)) - 1)
        return c0, c1

    def support_radius(self, j: int, upsilon: int) -> float:
        """Physical radius of the smallest ball around m covering the support."""
        r = []
        for axis in range(2):
            w = self._axis_filter(j, upsilon, axis)
            nz = np.nonzero(np.abs(w) > _SUPPORT_TOL * np.abs(w).max())[0]
            c = 0.5 * (len(w) - 1)
            r.append(max(c - nz[0], nz[-1] - c))
        return float(np.hypot(r[0], r[1]) / self.n)

    def support_constant(self) -> float:
        """q with supp(element) inside B_{q 2^-j}(m) for every system index."""
        q = 0.0
        for j, ups in self.scale_types():
            q = max(q, self.support_radius(j, ups) * 2.0**j)
        return q

    def positions(self, j: int, upsilon: int) -> tuple[np.ndarray, np.ndarray]:
        """Physical centers (folded into [0,1)) of the scale-j translate lattice,
        one 1-D array per axis."""
        step = 2 ** (self.p_total - j)
        c0, c1 = self.element_center_px(j, upsilon)
        a = np.arange(2**j)
        m0 = np.mod((a * step + c0 + 0.5) / self.n, 1.0)
        m1 = np.mod((a * step + c1 + 0.5) / self.n, 1.0)
        return m0, m1

    def scale_types(self):
        """All (j, upsilon) subband labels, coarse to fine."""
        out = [(self.coarsest, 0)]
        for j in range(self.coarsest, self.finest + 1):
            out.extend((j, u) for u in (1, 2, 3))
        return out

    def scale_slices(self, j: int, upsilon: int) -> tuple[slice, slice]:
        b = 2**j
        if upsilon == 0:
            return slice(0, b), slice(0, b)
        if upsilon == 1:
            return slice(0, b), slice(b, 2 * b)
        if upsilon == 2:
            return slice(b, 2 * b), slice(0, b)
        return slice(b, 2 * b), slice(b, 2 * b)

    def scale_layout(self, values) -> np.ndarray:
        """(n, n) array with values[j] broadcast over every scale-j block.

        ``values`` maps scale -> float (e.g. the 2^{-js} frame reweighting).
        """
        out = np.zeros((self.n, self.n))
        for j, ups in self.scale_types():
            out[self.scale_slices(j, ups)] = values[j]
        return out

    # -- transforms --------------------------------------------------------

    def analysis(self, f: np.ndarray) -> np.ndarray:
        """L2 coefficients <f, element> for the full system, packed (n, n)."""
        if f.shape != (self.n, self.n):
            raise ValueError(f"expected shape {(self.n, self.n)}, got {f.shape}")
        out = np.array(f, dtype=np.float64)
        size = self.n
        for _ in range(self.levels):
            blk = out[:size, :size]
            lo1, hi1 = _split1d(blk, self.h, self.g)
            lo = np.stack(_split1d(lo1.T, self.h, self.g))  # (2, size/2, size/2)
            hi = np.stack(_split1d(hi1.T, self.h, self.g))
            half = size // 2
            blk[:half, :half] = lo[0].T
            blk[:half, half:size] = hi[0].T
            blk[half:size, :half] = lo[1].T
            blk[half:size, half:size] = hi[1].T
            size = half
        out /= self.n
        return out

    def synthesis(self, coeffs: np.ndarray) -> np.ndarray:
        """Adjoint (= inverse) of :meth:`analysis`."""
        if coeffs.shape != (self.n, self.n):
            raise ValueError(f"expected shape {(self.n, self.n)}, got {coeffs.shape}")
        out = np.array(coeffs, dtype=np.float64)
        size = self.n >> self.levels
        while size < self.n:
            dbl = size * 2
            ll = out[:size, :size]
            v1 = out[:size, size:dbl]
            v2 = out[size:dbl, :size]
            v3 = out[size:dbl, size:dbl]
            lo1 = _merge1d(ll.T, v2.T, self.h, self.g).T
            hi1 = _merge1d(v1.T, v3.T, self.h, self.g).T
            out[:dbl, :dbl] = _merge1d(lo1, hi1, self.h, self.g)
            size = dbl
        out *= self.n
        return out

    def h1_analysis(self, f: np.ndarray) -> np.ndarray:
        """Coefficients with respect to the discrete H1 scalar product,
        computed by analyzing f - laplacian(f)."""
        return self.analysis(grid.helmholtz(f))

    # -- enumeration / explicit elements -----------------------------------

    def theta(self) -> list[WaveletIndex]:
        """Enumerate the index set of the system, coarse to fine."""
        out = []
        for j, ups in self.scale_types():
            m0, m1 = self.positions(j, ups)
            r = self.support_radius(j, ups)
            for a in range(2**j):
                for b in range(2**j):
                    out.append(WaveletIndex(j, (float(m0[a]), float(m1[b])), ups, r))
        return out

    def element(self, j: int, upsilon: int, a: int, b: int) -> np.ndarray:
        """Explicit sample array of one element (continuum L2 normalization).

        Built from the non-periodized equivalent filters, independently of
        the cascade transform; used by the oracle tests and diagnostics.
        """
        step = 2 ** (self.p_total - j)
        w0 = self._axis_filter(j, upsilon, 0)
        w1 = self._axis_filter(j, upsilon, 1)
        out = np.zeros((self.n, self.n))
        i0 = (a * step + np.arange(len(w0))) % self.n
        i1 = (b * step + np.arange(len(w1))) % self.n
        np.add.at(out, (i0[:, None], i1[None, :]), np.outer(w0, w1))
        return out * self.n


def vanishing_moments_check(cfg: WaveletSystemConfig, levels: int = 3) -> float:
    """Largest normalized discrete moment of degree < p over the detail
    filters of the first few cascade levels.  Values <= 1e-8 certify the
    generator's vanishing moments survive the digital construction.
    """
    h = cfg.lowpass()
    g = quadrature_mirror(h)
    p = cfg.vanishing_moments
    worst = 0.0
    eq_lo = np.array([1.0])
    for lev in range(1, levels + 1):
        up = 2 ** (lev - 1)
        eq_hi = np.convolve(eq_lo, _upsample(g, up))
        t = np.arange(len(eq_hi)) - 0.5 * (len(eq_hi) - 1)
        scale = np.linalg.norm(eq_hi)
        for d in range(p):
            mom = abs(np.sum(eq_hi * t**d)) / (scale * max(1.0, 0.5 * len(eq_hi)) ** d)
            worst = max(worst, float(mom))
        eq_lo = np.convolve(eq_lo, _upsample(h, up))
    return worst


def export_coefficients_csv(system: WaveletSystem, coeffs: np.ndarray, path) -> None:
    """CSV rows (j, m1, m2, upsilon, value) for all stored coefficients."""
    with open(path, "w") as fh:
        fh.write("j,m1,m2,upsilon,value\n")
        for j, ups in system.scale_types():
            sl = system.scale_slices(j, ups)
            block = coeffs[sl]
            m0, m1 = system.positions(j, ups)
            for a in range(block.shape[0]):
                for b in range(block.shape[1]):
                    fh.write(f"{j},{m0[a]:.17g},{m1[b]:.17g},{ups},{block[a, b]:.17g}\n")


def load_taps(path) -> np.ndarray:
    """Read generator taps from a plain-text column file."""
    taps = np.loadtxt(path, dtype=np.float64, ndmin=1)
    if taps.ndim != 1 or len(taps) < 2 or len(taps) % 2:
        raise ValueError("taps file must hold one even-length column of reals")
    return taps
