"""Discrete functions on the unit square and the basic operators acting on them.

A grid function is a plain float64 array of shape (n, n) holding samples of a
function on (0,1)^2 at the cell centers

    x[i, k] = ((i + 0.5) / n, (k + 0.5) / n),      i, k = 0, ..., n-1,

with axis 0 along x1 and axis 1 along x2.  n must be a power of two and at
least 4 so that dyadic scales align with the pixel lattice and radix-2 FFTs
apply.  All operators in this module are pure functions; none of them mutates
its input.

The discrete Laplacian uses the 5-point stencil with antisymmetric (mirror)
ghost cells, the cell-centered realization of homogeneous Dirichlet data: the
products sin(pi*k1*x1)*sin(pi*k2*x2) sampled at cell centers are its exact
eigenvectors, which makes the sine-spectral solves in this package exact
inverses of the stencil.
"""

from __future__ import annotations

import struct

import numpy as np
import scipy.fft


def validate_grid(values: np.ndarray) -> np.ndarray:
    """Check grid-function invariants and return the array as float64.

    Raises ValueError for non-square shapes, n < 4, n not a power of two,
    or non-finite entries.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError(f"grid function must be square, got shape {values.shape}")
    n = values.shape[0]
    if n < 4 or (n & (n - 1)) != 0:
        raise ValueError(f"grid size must be a power of two >= 4, got n={n}")
    if not np.all(np.isfinite(values)):
        raise ValueError("grid function contains non-finite values")
    return values


def cell_centers(n: int) -> np.ndarray:
    """1-D cell-center coordinates (i + 0.5)/n."""
    return (np.arange(n) + 0.5) / n


def meshgrid(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell-center coordinate arrays (X1, X2), each of shape (n, n)."""
    t = cell_centers(n)
    return np.meshgrid(t, t, indexing="ij")


def inner_l2(f: np.ndarray, g: np.ndarray) -> float:
    """Discrete L2 inner product (1/n^2) * sum(f * g)."""
    if f.shape != g.shape:
        raise ValueError(f"size mismatch: {f.shape} vs {g.shape}")
    n = f.shape[0]
    return float(np.dot(f.ravel(), g.ravel()) / (n * n))


def norm_l2(f: np.ndarray) -> float:
    n = f.shape[0]
    return float(np.linalg.norm(f) / n)


def laplacian(f: np.ndarray) -> np.ndarray:
    """5-point discrete Laplacian with mirror ghost cells, scaled by n^2.

    Ghost values are the negated edge cells (antisymmetric reflection about
    the wall), so homogeneous Dirichlet data is enforced exactly at the cell
    interfaces x = 0 and x = 1.  The stencil matrix is symmetric and negative
    definite.
    """
    n = f.shape[0]
    out = -4.0 * f
    out[1:, :] += f[:-1, :]
    out[0, :] -= f[0, :]
    out[:-1, :] += f[1:, :]
    out[-1, :] -= f[-1, :]
    out[:, 1:] += f[:, :-1]
    out[:, 0] -= f[:, 0]
    out[:, :-1] += f[:, 1:]
    out[:, -1] -= f[:, -1]
    out *= float(n * n)
    return out


def helmholtz(f: np.ndarray) -> np.ndarray:
    """Apply I - Laplacian, the discrete H1 Riesz map."""
    return f - laplacian(f)


def inner_h1(f: np.ndarray, g: np.ndarray) -> float:
    """Discrete H1 inner product <f, g - laplacian(g)>_L2.

    The mirror-ghost stencil is self-adjoint on all grid functions, so this
    form is symmetric and positive definite regardless of boundary behavior.
    """
    if f.shape != g.shape:
        raise ValueError(f"size mismatch: {f.shape} vs {g.shape}")
    return inner_l2(f, helmholtz(g))


def norm_h1(f: np.ndarray) -> float:
    return float(np.sqrt(max(inner_h1(f, f), 0.0)))


def partial_diff(f: np.ndarray, axis: int) -> np.ndarray:
    """Centered difference scaled by n along axis 1 or 2 (one-sided at walls)."""
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    n = f.shape[0]
    a = axis - 1
    fm = np.moveaxis(f, a, 0)
    out = np.empty_like(fm)
    out[1:-1] = 0.5 * (fm[2:] - fm[:-2])
    out[0] = fm[1] - fm[0]
    out[-1] = fm[-1] - fm[-2]
    return np.moveaxis(out, 0, a) * float(n)


# -- fast circular convolution ------------------------------------------------

class ConvolutionPlan:
    """Reusable frequency-domain workspace for n x n circular convolutions.

    Instances are read-only after construction and safe to share across
    concurrent calls.
    """

    def __init__(self, n: int):
        self.n = int(n)

    def rfft2(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfft2(a)

    def irfft2(self, A: np.ndarray) -> np.ndarray:
        return np.fft.irfft2(A, s=(self.n, self.n))


def convolve(f: np.ndarray, filt: np.ndarray, plan: ConvolutionPlan | None = None) -> np.ndarray:
    """Circular convolution (f * filt)[m] = sum_x f[x] filt[m - x], exact to
    working precision, O(n^2 log n)."""
    if f.shape != filt.shape:
        raise ValueError(f"size mismatch: {f.shape} vs {filt.shape}")
    if plan is None:
        plan = ConvolutionPlan(f.shape[0])
    elif plan.n != f.shape[0]:
        raise ValueError(f"plan built for n={plan.n}, input has n={f.shape[0]}")
    return plan.irfft2(plan.rfft2(f) * plan.rfft2(filt))


def correlate(f: np.ndarray, filt: np.ndarray, plan: ConvolutionPlan | None = None) -> np.ndarray:
    """Circular cross-correlation c[m] = sum_x f[x] filt[x - m]."""
    if f.shape != filt.shape:
        raise ValueError(f"size mismatch: {f.shape} vs {filt.shape}")
    if plan is None:
        plan = ConvolutionPlan(f.shape[0])
    return plan.irfft2(plan.rfft2(f) * np.conj(plan.rfft2(filt)))


# -- sine-spectral helpers ----------------------------------------------------
#
# The mirror-ghost Laplacian is diagonalized exactly by the orthonormal
# DST-II basis sin(pi*k*(i+0.5)/n), k = 1..n, with per-axis eigenvalues
# lam[k] = 2 n^2 (1 - cos(pi k / n)).  These helpers are used for the
# (I - Laplacian)^{+-1/2} factors and for the reference Poisson oracle; the
# production transform path never uses them.

def dirichlet_eigenvalues(n: int) -> np.ndarray:
    """Per-axis eigenvalues of -laplacian in the DST-II basis."""
    k = np.arange(1, n + 1)
    return 2.0 * n * n * (1.0 - np.cos(np.pi * k / n))


def dst2(f: np.ndarray) -> np.ndarray:
    return scipy.fft.dstn(f, type=2, norm="ortho")


def idst2(F: np.ndarray) -> np.ndarray:
    return scipy.fft.idstn(F, type=2, norm="ortho")


def helmholtz_power(f: np.ndarray, power: float) -> np.ndarray:
    """Apply (I - Laplacian)^power through the sine-spectral diagonalization.

    power = -1 inverts the Riesz map; power = +-0.5 gives the symmetric
    square-root factors used by the frame-bound estimator.
    """
    n = f.shape[0]
    lam = dirichlet_eigenvalues(n)
    sym = 1.0 + lam[:, None] + lam[None, :]
    return idst2(dst2(f) * sym**power)


# -- serialization ------------------------------------------------------------

_MAGIC_RESERVED = b"\x00\x00\x00\x00"


def dump_binary(f: np.ndarray, path) -> None:
    """Write flat row-major float64 with an 8-byte header (u32 LE n + 4 reserved)."""
    f = validate_grid(f)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", f.shape[0]))
        fh.write(_MAGIC_RESERVED)
        fh.write(f.astype("<f8").tobytes(order="C"))


def load_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(8)
        if len(head) != 8:
            raise ValueError("truncated header")
        (n,) = struct.unpack("<I", head[:4])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if n < 4 or (n & (n - 1)) != 0 or data.size != n * n:
        raise ValueError(f"malformed grid file: n={n}, payload={data.size}")
    return data.reshape(n, n).astype(np.float64)


def to_pgm(f: np.ndarray, path) -> None:
    """Plain-text (P2) PGM export; values are affinely mapped to 0..255.

    A constant image maps to mid-gray 128.
    """
    f = validate_grid(f)
    lo, hi = float(f.min()), float(f.max())
    if hi - lo < 1e-300:
        pix = np.full(f.shape, 128, dtype=np.int64)
    else:
        pix = np.rint((f - lo) / (hi - lo) * 255.0).astype(np.int64)
    n = f.shape[0]
    lines = [f"P2", f"{n} {n}", "255"]
    for row in pix:
        lines.append(" ".join(str(int(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
