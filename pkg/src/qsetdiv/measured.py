"""Measured relative entropy and measured Renyi divergences of a pair.

Both quantities are computed from their variational forms over positive
definite operators. The operator variable is written as ``exp(S)`` with ``S``
Hermitian, so the search is unconstrained; gradients use the divided
difference (Daleckii-Krein) form of the Frechet derivative of ``exp``.
"""

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.optimize import minimize

from . import tolerances as tol
from .divergences import _check_alpha, sandwiched, umegaki
from .infinity import INF
from .linalg import (
    LN2,
    as_array,
    eigh,
    frechet,
    from_eig,
    hermitize,
    loewner_exp,
    spec_count,
    supported_in,
)


@dataclass
class MeasuredResult:
    value: Any
    witness_omega: Any
    ascent_iterations: int
    gradient_norm: float
    infinite: bool = False

    def __float__(self):
        return math.inf if self.infinite else float(self.value)


# --- real coordinates for Hermitian matrices -------------------------------

def herm_to_vec(H):
    d = H.shape[0]
    iu = np.triu_indices(d, 1)
    return np.concatenate([H.diagonal().real, H[iu].real, H[iu].imag])


def vec_to_herm(v, d):
    iu = np.triu_indices(d, 1)
    k = len(iu[0])
    H = np.zeros((d, d), dtype=complex)
    H[iu] = v[d:d + k] + 1j * v[d + k:]
    H = H + H.conj().T
    H[np.diag_indices(d)] = v[:d]
    return H


def grad_to_vec(G):
    """Coordinates g with tr[G H] = g . herm_to_vec(H) for Hermitian G, H."""
    d = G.shape[0]
    iu = np.triu_indices(d, 1)
    return np.concatenate([G.diagonal().real, 2 * G[iu].real, 2 * G[iu].imag])


class ExpTerms:
    """tr[X exp(c S)] and its gradient in S, sharing one eigendecomposition."""

    def __init__(self, S):
        self.w, self.U = np.linalg.eigh(S)
        self._cache = {}

    def value(self, X, c):
        e = np.exp(c * self.w)
        Xt = self.U.conj().T @ X @ self.U
        return float(np.real(Xt.diagonal() @ e))

    def grad(self, X, c):
        K = self._cache.get(c)
        if K is None:
            K = self._cache[c] = loewner_exp(self.w, c)
        return frechet(self.U, K, X)

    def power(self, c):
        return from_eig(np.exp(c * self.w), self.U)


def preconditioner(reference):
    """Diagonal scaling in the eigenbasis of a reference state.

    Near the optimum the curvature of the exp-parametrized objectives along
    |i><j| behaves like the logarithmic mean of the reference eigenvalues
    r_i, r_j; dividing by its square root evens out the spectrum of the
    Hessian.
    """
    w, V = np.linalg.eigh(hermitize(reference))
    w = np.maximum(w, 1e-4 * max(w.max(), 1e-300))
    a, b = w[:, None], w[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        lm = np.where(np.abs(a - b) > 1e-12 * np.maximum(a, b), (a - b) / np.log(a / b), a)
    return V, 1.0 / np.sqrt(lm)


def ascend(objective, S0, maximize, max_iter=None, gtol=None, precond=None):
    """Run L-BFGS on a smooth function of a Hermitian matrix.

    ``objective(S)`` returns ``(value, gradient matrix)``. With ``precond``
    (from :func:`preconditioner`) the search runs in the scaled coordinates
    S = V (P o T) V^H. Returns the final S, value, iteration count and
    Frobenius norm of the gradient.
    """
    d = S0.shape[0]
    sign = -1.0 if maximize else 1.0
    max_iter = tol.get("ascent_max_iter") if max_iter is None else max_iter
    gtol = tol.get("gradient") if gtol is None else gtol
    if precond is None:
        V, P = np.eye(d), np.ones((d, d))
    else:
        V, P = precond

    def to_S(T):
        return V @ (P * T) @ V.conj().T

    def fun(v):
        # line-search probes can overflow exp; L-BFGS then backtracks
        with np.errstate(over="ignore", invalid="ignore"):
            val, G = objective(to_S(vec_to_herm(v, d)))
            return sign * val, sign * grad_to_vec(P * (V.conj().T @ G @ V))

    v = herm_to_vec((V.conj().T @ S0 @ V) / P)
    total = 0
    best = None
    for _ in range(4):
        res = minimize(fun, v, jac=True, method="L-BFGS-B",
                       options={"maxiter": max_iter, "gtol": gtol * 1e-3,
                                "ftol": 1e-16, "maxcor": 30})
        total += res.nit
        v = res.x
        S = hermitize(to_S(vec_to_herm(v, d)))
        val, G = objective(S)
        gnorm = float(np.linalg.norm(G))
        best = (S, val, total, gnorm)
        if gnorm <= gtol or res.nit == 0:
            break
    return best


def _restrict(r, s):
    """Compress both operators to the support of s."""
    w, U = eigh(s)
    keep = w > tol.get("support_floor") * max(w.max(), 1e-300)
    V = U[:, keep]
    return V.conj().T @ r @ V, V.conj().T @ s @ V, V


def dm(rho, sigma, S0=None):
    """Measured relative entropy in bits.

    The objective tr[rho ln w] + 1 - tr[sigma w] is maximized over w = exp(S);
    its optimum is the divergence in nats. ``witness_omega`` is the optimal w
    on the full space (zero outside the support of sigma).
    """
    r, s = hermitize(as_array(rho)), hermitize(as_array(sigma))
    if not supported_in(r, s):
        return MeasuredResult(INF, None, 0, 0.0, infinite=True)
    rr, ss, V = _restrict(r, s)
    d = rr.shape[0]

    def objective(S):
        E = ExpTerms(S)
        val = float(np.real(np.trace(rr @ S))) + 1 - E.value(ss, 1.0)
        return val, rr - E.grad(ss, 1.0)

    S0 = np.zeros((d, d), complex) if S0 is None else V.conj().T @ S0 @ V
    S, val, it, gnorm = ascend(objective, S0, maximize=True, precond=preconditioner(rr))
    bits = val / LN2
    if bits > tol.get("infinite_bits"):
        return MeasuredResult(INF, None, it, gnorm, infinite=True)
    omega = V @ from_eig(np.exp(np.linalg.eigvalsh(S)), np.linalg.eigh(S)[1]) @ V.conj().T
    return MeasuredResult(bits, omega, it, gnorm)


def regime(alpha):
    if alpha > 1:
        return "above"
    return "low" if alpha < 0.5 else "mid"


def dm_alpha(alpha, rho, sigma, S0=None):
    """Measured Renyi divergence of order alpha in bits.

    With p = (alpha-1)/alpha and q = alpha/(alpha-1), the programs are

    * alpha in [1/2, 1): inf_W  alpha tr[rho W^p] + (1-alpha) tr[sigma W]
    * alpha in (0, 1/2): inf_W  alpha tr[rho W]   + (1-alpha) tr[sigma W^q]
    * alpha > 1:         sup_W  alpha tr[rho W^p] + (1-alpha) tr[sigma W]

    and the divergence is log(optimum) / (alpha - 1).
    """
    _check_alpha(alpha)
    if alpha > tol.get("alpha_max"):
        raise ValueError(f"alpha above {tol.get('alpha_max')} is not supported; use dmax")
    r, s = hermitize(as_array(rho)), hermitize(as_array(sigma))
    V = np.eye(r.shape[0])
    if alpha > 1:
        if not supported_in(r, s):
            return MeasuredResult(INF, None, 0, 0.0, infinite=True)
        r, s, V = _restrict(r, s)
    d = r.shape[0]
    p = (alpha - 1) / alpha
    kind = regime(alpha)
    if kind == "low":
        cr, cs = 1.0, alpha / (alpha - 1)
    else:
        cr, cs = p, 1.0

    def objective(S):
        E = ExpTerms(S)
        val = alpha * E.value(r, cr) + (1 - alpha) * E.value(s, cs)
        G = alpha * E.grad(r, cr) + (1 - alpha) * E.grad(s, cs)
        return val, G

    S0 = np.zeros((d, d), complex) if S0 is None else V.conj().T @ S0 @ V
    S, val, it, gnorm = ascend(objective, S0, maximize=(kind == "above"),
                               precond=preconditioner(r))
    if val <= 0:
        return MeasuredResult(INF, None, it, gnorm, infinite=True)
    bits = math.log2(val) / (alpha - 1)
    if bits > tol.get("infinite_bits"):
        return MeasuredResult(INF, None, it, gnorm, infinite=True)
    w, U = np.linalg.eigh(S)
    W = V @ from_eig(np.exp(w), U) @ V.conj().T
    return MeasuredResult(bits, W, it, gnorm)


@dataclass
class PinchingCheck:
    lhs: Any
    mid: Any
    rhs: Any
    ok: bool


def pinching_sandwich_check(alpha, rho, sigma, slack=1e-6):
    """Check measured <= sandwiched <= measured + 2 log(#distinct eigenvalues of sigma).

    At alpha = 1 the measured relative entropy and the Umegaki divergence are used.
    """
    if alpha < 0.5:
        raise ValueError("the pinching bound is stated for alpha >= 1/2")
    if alpha == 1:
        lhs, mid = dm(rho, sigma), umegaki(rho, sigma)
    else:
        lhs, mid = dm_alpha(alpha, rho, sigma), sandwiched(alpha, rho, sigma)
    if lhs.infinite or mid.infinite:
        ok = lhs.infinite and mid.infinite
        return PinchingCheck(lhs.value, mid.value, INF, ok)
    rhs = float(lhs.value) + 2 * math.log2(spec_count(sigma))
    ok = lhs.value <= mid.value + slack and mid.value <= rhs + slack
    return PinchingCheck(float(lhs.value), float(mid.value), rhs, bool(ok))
