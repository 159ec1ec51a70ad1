"""Generic power iteration and conjugate gradients over duck-typed vectors.

A vector type only needs +, -, scalar *, and the supplied dot callable; both
numpy arrays and coefficient stacks qualify.  Solvers report convergence
instead of silently truncating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class IterationResult:
    value: float
    vector: object
    iterations: int
    converged: bool


def power_iteration(op, x0, dot, tol: float = 1e-6, maxiter: int = 200) -> IterationResult:
    """Largest eigenvalue of a self-adjoint positive operator.

    Stops when the Rayleigh quotient's relative increment drops below tol.
    """
    x = x0 * (1.0 / np.sqrt(dot(x0, x0)))
    lam = 0.0
    for it in range(1, maxiter + 1):
        y = op(x)
        lam_new = dot(x, y)
        nrm = np.sqrt(dot(y, y))
        if nrm == 0.0:
            return IterationResult(0.0, x, it, True)
        x = y * (1.0 / nrm)
        if it > 1 and abs(lam_new - lam) <= tol * abs(lam_new):
            return IterationResult(float(lam_new), x, it, True)
        lam = lam_new
    return IterationResult(float(lam), x, maxiter, False)


def largest_eigenvalue(op, x0, dot, tol: float = 1e-6, maxiter: int = 200) -> IterationResult:
    """Largest eigenvalue of a self-adjoint positive operator.

    Power iteration refined by a Rayleigh-Ritz step over span{x, op x,
    x_prev}; the refinement costs no extra operator applications beyond the
    power step and resolves clustered top eigenvalues far faster.
    """

    def normalize(v):
        return v * (1.0 / np.sqrt(dot(v, v)))

    x = normalize(x0)
    x_prev = None
    lam = 0.0
    converged = False
    it = 0
    for it in range(1, maxiter + 1):
        y = op(x)
        basis = [x, normalize(y)] + ([x_prev] if x_prev is not None else [])
        vecs = []
        for v in basis:
            w = v
            for u in vecs:
                w = w - dot(u, w) * u
            nw = np.sqrt(dot(w, w))
            if nw > 1e-10:
                vecs.append(w * (1.0 / nw))
        hv = [op(v) for v in vecs]
        k = len(vecs)
        small = np.array([[dot(vecs[i], hv[j]) for j in range(k)] for i in range(k)])
        small = 0.5 * (small + small.T)
        evals, evecs = np.linalg.eigh(small)
        coef = evecs[:, -1]
        x_new = coef[0] * vecs[0]
        for i in range(1, k):
            x_new = x_new + coef[i] * vecs[i]
        x_prev = x
        x = normalize(x_new)
        lam_new = float(evals[-1])
        if it > 1 and abs(lam_new - lam) <= tol * abs(lam_new):
            lam = lam_new
            converged = True
            break
        lam = lam_new
    return IterationResult(float(lam), x, it, converged)


def smallest_eigenvalue(
    op,
    x0,
    dot,
    tol: float = 1e-6,
    maxiter: int = 40,
    cg_tol: float = 1e-2,
    cg_maxiter: int = 200,
) -> IterationResult:
    """Smallest eigenvalue of a self-adjoint positive operator.

    Inverse iteration with inner conjugate-gradient solves, accelerated by a
    Rayleigh-Ritz step over span{x, H^{-1}x, x_prev} (the locally optimal
    three-term recurrence); the Rayleigh quotient decreases monotonically even
    with loose inner solves.
    """

    def normalize(v):
        return v * (1.0 / np.sqrt(dot(v, v)))

    x = normalize(x0)
    hx = op(x)
    lam = dot(x, hx)
    x_prev = None
    it = 0
    converged = False
    for it in range(1, maxiter + 1):
        y, _, _ = conjugate_gradient(op, x, dot, x0=x * (1.0 / lam), tol=cg_tol, maxiter=cg_maxiter)
        basis = [x, y] + ([x_prev] if x_prev is not None else [])
        vecs = []
        for v in basis:
            w = v
            for u in vecs:
                w = w - dot(u, w) * u
            nw = np.sqrt(dot(w, w))
            if nw > 1e-10:
                vecs.append(w * (1.0 / nw))
        hv = [op(v) for v in vecs]
        k = len(vecs)
        small = np.array([[dot(vecs[i], hv[j]) for j in range(k)] for i in range(k)])
        small = 0.5 * (small + small.T)
        evals, evecs = np.linalg.eigh(small)
        coef = evecs[:, 0]
        x_new = coef[0] * vecs[0]
        for i in range(1, k):
            x_new = x_new + coef[i] * vecs[i]
        x_prev = x
        x = normalize(x_new)
        lam_new = float(evals[0])
        if abs(lam_new - lam) <= tol * abs(lam_new):
            lam = lam_new
            converged = True
            break
        lam = lam_new
    return IterationResult(float(lam), x, it, converged)


def conjugate_gradient(op, b, dot, x0=None, tol: float = 1e-8, maxiter: int = 500) -> tuple:
    """CG for a self-adjoint positive (semi)definite operator in the metric
    induced by ``dot``; returns (x, iterations, converged).

    The stopping rule is a residual norm below tol * ||b||.  For a consistent
    singular system started at zero this converges to the minimum-norm
    solution in the given metric.
    """
    norm_b = np.sqrt(dot(b, b))
    if norm_b == 0.0:
        return b * 0.0, 0, True
    if x0 is None:
        x = b * 0.0
        r = b.copy() if hasattr(b, "copy") else b * 1.0
    else:
        x = x0.copy() if hasattr(x0, "copy") else x0 * 1.0
        r = b - op(x)
    d = r * 1.0
    delta = dot(r, r)
    target = (tol * norm_b) ** 2
    for it in range(1, maxiter + 1):
        if delta <= target:
            return x, it - 1, True
        q = op(d)
        dq = dot(d, q)
        if dq <= 0.0:
            # numerically lost positivity; stop with what we have
            return x, it - 1, False
        alpha = delta / dq
        x = x + alpha * d
        r = r - alpha * q
        delta_new = dot(r, r)
        d = r + (delta_new / delta) * d
        delta = delta_new
    return x, maxiter, delta <= target
