"""Empirical N-term approximation studies in the discrete H1 norm.

Given a target function, its hybrid coefficients are sorted by modulus; for a
budget N the N largest are kept and the function is rebuilt through the
canonical dual frame.  No explicit dual elements exist, so the dual-frame
partial sum u_N = S^{-1}(sum of kept weighted elements) is computed by
conjugate gradients on the frame operator S, run in the discrete H1 inner
product where S is self-adjoint; started from zero (or the previous budget's
solution) the iteration converges to the minimum-H1-norm reconstruction
consistent with the kept coefficients.

The wavelet-only baseline uses the full orthonormal system, where the duals
are explicit: inverting the diagonal scale weights and the H1 Riesz map
reconstructs exactly, no iteration involved.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import grid
from .hybrid import CoefficientVector, FrameConfig, HybridFrame
from .iterative import conjugate_gradient
from .wavelets import WaveletSystem, WaveletSystemConfig


@dataclass
class RateTable:
    """Best-N-term error curve plus its fitted decay rate."""

    rows: list[dict] = field(default_factory=list)
    slope: float = float("nan")
    intercept: float = float("nan")
    residual: float = float("nan")

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("N,err2_h1,err_h1,threshold,cg_iters\n")
        for r in self.rows:
            buf.write(
                f"{r['N']},{r['err2_h1']:.17g},{r['err_h1']:.17g},"
                f"{r['threshold']:.17g},{r['cg_iters']}\n"
            )
        return buf.getvalue()


def default_budgets(total: int, n_points: int = 16, n_min: int = 16, n_max: int = 1 << 14) -> list[int]:
    """Geometric N schedule from 16 up to min(2^14, total/2)."""
    hi = min(n_max, total // 2)
    if hi <= n_min:
        raise ValueError(f"too few admissible coefficients ({total}) for an N-term study")
    ns = np.unique(np.geomspace(n_min, hi, n_points).astype(int))
    return [int(v) for v in ns]


def rate_fit(table: RateTable, keep_fraction: float = 0.8) -> tuple[float, float, float]:
    """Least squares on (log N, log err^2) over the middle of the N range.

    Rows whose log N falls in the outer (1 - keep_fraction)/2 tails of the
    span are dropped, as are non-positive errors (with a warning).  Returns
    (slope, intercept, rms residual) and stores them on the table.
    """
    N = table.column("N").astype(float)
    e2 = table.column("err2_h1")
    good = e2 > 0
    if not np.all(good):
        warnings.warn(f"excluding {int(np.sum(~good))} degenerate rows from the rate fit")
    N, e2 = N[good], e2[good]
    if len(N) < 5:
        raise ValueError("rate fit needs at least 5 rows with positive errors")
    x = np.log(N)
    lo, hi = x.min(), x.max()
    pad = 0.5 * (1.0 - keep_fraction) * (hi - lo)
    mid = (x >= lo + pad) & (x <= hi - pad)
    x, y = x[mid], np.log(e2[mid])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((np.polyval([slope, intercept], x) - y) ** 2)))
    table.slope, table.intercept, table.residual = float(slope), float(intercept), resid
    return float(slope), float(intercept), resid


@dataclass
class DecayReport:
    magnitudes: np.ndarray
    exponent: float
    fit_window: tuple[int, int]
    generic: bool


def coefficient_decay(u: np.ndarray, frame: HybridFrame, log_power: float = 1.5) -> DecayReport:
    """Sorted hybrid coefficient magnitudes and their fitted decay exponent.

    The exponent is fitted on the log-compensated sequence
    |c|_(N) / log^{log_power}(N + 2) over the middle two decades of N.  A
    leading magnitude that dwarfs the rest of the sequence marks a
    non-generic input (e.g. a single synthesized frame element) and is
    flagged rather than fitted blindly.
    """
    c = frame.analysis(u)
    mags = np.concatenate([np.abs(c.wavelet.ravel()), np.abs(c.shearlet.ravel())])
    mags = np.sort(mags[mags > 0.0])[::-1]
    if len(mags) < 100:
        raise ValueError(f"only {len(mags)} nonzero coefficients; decay fit needs >= 100")
    n_tot = len(mags)
    center = 0.5 * np.log10(n_tot)
    lo = max(1, int(10 ** (center - 1.0)))
    hi = min(n_tot, int(10 ** (center + 1.0)))
    idx = np.unique(np.geomspace(lo, hi, 200).astype(int)) - 1
    x = np.log(idx + 1.0)
    y = np.log(mags[idx] / np.log(idx + 3.0) ** log_power)
    exponent = float(np.polyfit(x, y, 1)[0])
    generic = bool(mags[0] ** 2 < 0.5 * np.sum(mags**2))
    return DecayReport(mags, exponent, (lo, hi), generic)


def frame_operator(frame: HybridFrame):
    """The H1 frame operator S = element_sum o analysis (self-adjoint and
    positive in the discrete H1 inner product)."""

    def op(v: np.ndarray) -> np.ndarray:
        return frame.element_sum(frame.analysis(v))

    return op


def _top_n_vector(c: CoefficientVector, order, flat_sizes, n: int) -> CoefficientVector:
    keep_w = np.zeros(flat_sizes[0], dtype=bool)
    keep_s = np.zeros(flat_sizes[1], dtype=bool)
    sel = order[:n]
    wsel = sel[sel < flat_sizes[0]]
    ssel = sel[sel >= flat_sizes[0]] - flat_sizes[0]
    keep_w[wsel] = True
    keep_s[ssel] = True
    return CoefficientVector(
        c.wavelet * keep_w.reshape(c.wavelet.shape),
        c.shearlet * keep_s.reshape(c.shearlet.shape),
    )


def nterm_curve(
    u: np.ndarray,
    frame: HybridFrame,
    budgets: list[int] | None = None,
    cg_tol: float = 1e-8,
    cg_maxiter: int = 400,
) -> RateTable:
    """Best-N-term H1 error curve through dual-frame synthesis.

    For each budget the N largest hybrid coefficients are kept and the
    minimum-H1-norm consistent reconstruction is computed by CG inversion of
    the frame operator (warm-started from the previous budget).  CG
    non-convergence is recorded per row, not raised.
    """
    c = frame.analysis(u)
    mags = np.concatenate([np.abs(c.wavelet.ravel()), np.abs(c.shearlet.ravel())])
    order = np.argsort(mags)[::-1]
    sizes = (c.wavelet.size, c.shearlet.size)
    if budgets is None:
        budgets = default_budgets(int(np.count_nonzero(mags)))
    op = frame_operator(frame)
    table = RateTable()
    x_prev = None
    for n_keep in budgets:
        c_n = _top_n_vector(c, order, sizes, n_keep)
        b = frame.element_sum(c_n)
        u_n, iters, ok = conjugate_gradient(
            op, b, grid.inner_h1, x0=x_prev, tol=cg_tol, maxiter=cg_maxiter
        )
        x_prev = u_n
        diff = u - u_n
        e2 = grid.inner_h1(diff, diff)
        table.rows.append(
            {
                "N": n_keep,
                "err2_h1": float(e2),
                "err_h1": float(np.sqrt(max(e2, 0.0))),
                "threshold": float(mags[order[n_keep - 1]]),
                "cg_iters": iters if ok else -iters,
            }
        )
    rate_fit(table)
    return table


class WaveletBaseline:
    """Full orthonormal wavelet system with H1 weights and explicit duals."""

    def __init__(self, cfg: WaveletSystemConfig, n: int, sobolev_order: float = 1.0):
        self.system = WaveletSystem(cfg, n)
        self.s = float(sobolev_order)
        w = {j: 2.0 ** (-j * self.s) for j, _ in self.system.scale_types()}
        self.weights = self.system.scale_layout(w)

    def analysis(self, u: np.ndarray) -> np.ndarray:
        return self.system.analysis(grid.helmholtz(u)) * self.weights

    def dual_synthesis(self, coeffs: np.ndarray) -> np.ndarray:
        # dual of (2^{-js} w) under the weighted H1 frame operator is
        # (I - laplacian)^{-1} (2^{+js} w); exact because the basis is
        # orthonormal, so the frame operator is diagonal in it
        return grid.helmholtz_power(self.system.synthesis(coeffs / self.weights), -1.0)


def wavelet_baseline(
    u: np.ndarray,
    cfg: WaveletSystemConfig,
    n: int | None = None,
    budgets: list[int] | None = None,
    sobolev_order: float = 1.0,
) -> RateTable:
    """Best-N-term H1 error curve of the wavelet-only system (no strip mask,
    no shearlets); duals are explicit, so every row is exact."""
    n = u.shape[0] if n is None else n
    base = WaveletBaseline(cfg, n, sobolev_order)
    c = base.analysis(u)
    mags = np.abs(c.ravel())
    order = np.argsort(mags)[::-1]
    if budgets is None:
        budgets = default_budgets(int(np.count_nonzero(mags)))
    table = RateTable()
    for n_keep in budgets:
        keep = np.zeros(mags.size, dtype=bool)
        keep[order[:n_keep]] = True
        u_n = base.dual_synthesis(c * keep.reshape(c.shape))
        diff = u - u_n
        e2 = grid.inner_h1(diff, diff)
        table.rows.append(
            {
                "N": n_keep,
                "err2_h1": float(e2),
                "err_h1": float(np.sqrt(max(e2, 0.0))),
                "threshold": float(mags[order[n_keep - 1]]),
                "cg_iters": 0,
            }
        )
    rate_fit(table)
    return table


@dataclass
class QuasiNormReport:
    exponent_p: float
    partial_sums: dict[int, float]
    saturation_increment: float
    saturated: bool
    nterm_slope: float


def higher_order_decay(
    u: np.ndarray,
    frame: HybridFrame,
    order_l: int,
    budgets: list[int] | None = None,
) -> QuasiNormReport:
    """ell^{2/(l+3)} quasi-norm saturation scan plus an N-term slope check.

    Requires a wavelet generator with at least l+2 vanishing moments.  The
    partial quasi-norm sums are accumulated scale by scale; bounded Cauchy
    increments over the finest scales indicate membership, and the fitted
    N-term squared-error slope is reported against the -(l+2) prediction.
    """
    p_moments = frame.cfg.wavelet.vanishing_moments
    if p_moments < order_l + 2:
        raise ValueError(
            f"quasi-norm study at order l={order_l} needs a generator with "
            f">= {order_l + 2} vanishing moments, got {p_moments}"
        )
    p = 2.0 / (order_l + 3.0)
    c = frame.analysis(u)
    by_scale: dict[int, float] = {}
    for j, ups in frame.wavelets.scale_types():
        sl = frame.wavelets.scale_slices(j, ups)
        by_scale[j] = by_scale.get(j, 0.0) + float(np.sum(np.abs(c.wavelet[sl]) ** p))
    for pl, info in enumerate(frame.shearlets.planes):
        by_scale[info.j] = by_scale.get(info.j, 0.0) + float(np.sum(np.abs(c.shearlet[pl]) ** p))
    scales = sorted(by_scale)
    partial = {}
    acc = 0.0
    for j in scales:
        acc += by_scale[j]
        partial[j] = acc ** (1.0 / p)
    tail = [partial[j] for j in scales[-3:]]
    increment = (tail[-1] - tail[0]) / tail[-1] if tail[-1] > 0 else 0.0
    table = nterm_curve(u, frame, budgets=budgets)
    return QuasiNormReport(
        exponent_p=p,
        partial_sums=partial,
        saturation_increment=float(increment),
        saturated=bool(increment < 0.01),
        nterm_slope=table.slope,
    )
