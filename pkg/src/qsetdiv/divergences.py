"""Divergences between a pair of operators. All values are in bits.

Infinite divergences are returned as the :data:`~qsetdiv.infinity.INF`
sentinel with ``infinite=True`` rather than as a float.
"""

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import tolerances as tol
from .errors import ConvergenceError, PreconditionError
from .infinity import INF
from .linalg import (
    LN2,
    as_array,
    eigh,
    floor_of,
    from_eig,
    hermitize,
    support_basis,
    supported_in,
    trace_norm,
)


@dataclass
class DivergenceResult:
    value: Any
    optimizer: Any = None
    iterations: int = 0
    residual: float = 0.0
    infinite: bool = False
    converged: bool = True

    def __float__(self):
        return math.inf if self.infinite else float(self.value)


def _infinite(optimizer=None):
    return DivergenceResult(INF, optimizer=optimizer, infinite=True)


@dataclass
class TestOperator:
    M: np.ndarray
    type1: float
    type2: float


@dataclass
class HypothesisTest:
    beta: float
    dh: Any
    x_star: float
    test: TestOperator
    iterations: int = 0


def _trace(X):
    return float(np.trace(X).real)


def _psd_eig(X):
    w, U = eigh(X)
    w = np.where(w > floor_of(w), w, 0.0)
    return w, U


def _power_on_support(w, U, p):
    vals = np.zeros_like(w)
    pos = w > 0
    vals[pos] = w[pos] ** p
    return from_eig(vals, U)


def umegaki(rho, sigma):
    """tr[rho (log rho - log sigma)]."""
    r, s = as_array(rho), as_array(sigma)
    if not supported_in(r, s):
        return _infinite()
    wr, _ = _psd_eig(r)
    ws, Us = _psd_eig(s)
    pos = wr > 0
    ent = float(np.sum(wr[pos] * np.log2(wr[pos])))
    log_s = np.zeros_like(ws)
    log_s[ws > 0] = np.log2(ws[ws > 0])
    cross = float(np.real(np.einsum("ij,ji->", Us.conj().T @ r @ Us, np.diag(log_s))))
    return DivergenceResult(ent - cross)


def _check_alpha(alpha):
    if not (alpha > 0 and alpha != 1):
        raise PreconditionError(f"alpha must lie in (0,1) or (1,inf), got {alpha}")


def petz(alpha, rho, sigma):
    """(1/(alpha-1)) log tr[rho^alpha sigma^(1-alpha)]."""
    _check_alpha(alpha)
    r, s = as_array(rho), as_array(sigma)
    if alpha > 1 and not supported_in(r, s):
        return _infinite()
    wr, Ur = _psd_eig(r)
    ws, Us = _psd_eig(s)
    overlap = np.abs(Ur.conj().T @ Us) ** 2
    mask = (wr[:, None] > 0) & (ws[None, :] > 0)
    with np.errstate(divide="ignore"):
        terms = np.where(mask, np.power(np.where(mask, wr[:, None], 1.0), alpha)
                         * np.power(np.where(mask, ws[None, :], 1.0), 1 - alpha), 0.0)
    Q = float(np.sum(terms * overlap))
    if Q <= 0:
        return _infinite()
    return DivergenceResult(math.log2(Q) / (alpha - 1))


def sandwiched(alpha, rho, sigma):
    """(1/(alpha-1)) log tr[(sigma^g rho sigma^g)^alpha] with g = (1-alpha)/(2 alpha)."""
    _check_alpha(alpha)
    r, s = as_array(rho), as_array(sigma)
    if alpha > 1 and not supported_in(r, s):
        return _infinite()
    ws, Us = _psd_eig(s)
    g = (1 - alpha) / (2 * alpha)
    half = _power_on_support(ws, Us, g)
    inner = np.linalg.eigvalsh(hermitize(half @ r @ half))
    inner = np.clip(inner, 0, None)
    Q = float(np.sum(inner[inner > 0] ** alpha))
    if Q <= 0:
        return _infinite()
    return DivergenceResult(math.log2(Q) / (alpha - 1))


def dmin(rho, sigma):
    """-log tr[P sigma] with P the support projector of rho."""
    B = support_basis(as_array(rho))
    q = _trace(B.conj().T @ as_array(sigma) @ B)
    if q <= tol.get("support_floor"):
        return _infinite()
    return DivergenceResult(-math.log2(q))


def dmax(rho, sigma):
    """log of the least t with rho <= t sigma."""
    r, s = as_array(rho), as_array(sigma)
    if not supported_in(r, s):
        return _infinite()
    ws, Us = _psd_eig(s)
    keep = ws > 0
    V = Us[:, keep] / np.sqrt(ws[keep])
    lam = np.linalg.eigvalsh(hermitize(V.conj().T @ r @ V))
    top = float(lam[-1])
    if top <= 0:
        return _infinite()
    return DivergenceResult(math.log2(top))


def _generalized_trace_distance(a, b):
    return trace_norm(a - b) / 2 + abs(_trace(a) - _trace(b)) / 2


def dmax_smoothed(epsilon, rho, sigma, ball="purified"):
    """Smoothed max-relative entropy over subnormalized rho' near rho.

    ``ball="purified"`` uses the purified distance; ``ball="trace"`` uses the
    generalized trace distance (1/2)||rho'-rho||_1 + (1/2)|tr rho' - tr rho|.
    The minimization of t subject to rho' <= t sigma is a small semidefinite
    program solved with cvxpy; the result is then re-evaluated with
    :func:`dmax` on the returned rho'.
    """
    import cvxpy as cp

    if not 0 < epsilon < 1:
        raise PreconditionError("epsilon must lie in (0,1)")
    if ball not in ("purified", "trace"):
        raise PreconditionError(f"unknown smoothing ball {ball!r}")
    r, s = hermitize(as_array(rho)), hermitize(as_array(sigma))
    n = r.shape[0]
    Rp = cp.Variable((n, n), hermitian=True)
    t = cp.Variable()
    cons = [Rp >> 0, cp.real(cp.trace(Rp)) <= 1, t * s - Rp >> 0]
    tr_r = _trace(r)
    if ball == "purified":
        X = cp.Variable((n, n), complex=True)
        block = cp.bmat([[Rp, X], [X.H, r]])
        slack = math.sqrt(max(0.0, 1 - tr_r))
        fid = cp.real(cp.trace(X)) + slack * cp.sqrt(1 - cp.real(cp.trace(Rp)))
        cons += [block >> 0, fid >= math.sqrt(1 - epsilon ** 2)]
    else:
        P = cp.Variable((n, n), hermitian=True)
        N = cp.Variable((n, n), hermitian=True)
        cons += [P >> 0, N >> 0, Rp - r == P - N,
                 cp.real(cp.trace(P + N)) / 2 + cp.abs(cp.real(cp.trace(Rp)) - tr_r) / 2 <= epsilon]
    prob = cp.Problem(cp.Minimize(t), cons)
    _solve(prob)
    if prob.status not in ("optimal", "optimal_inaccurate") or t.value is None:
        raise ConvergenceError(f"smoothing program ended with status {prob.status}")
    cand = hermitize(Rp.value)
    w, U = eigh(cand)
    cand = from_eig(np.clip(w, 0, None), U)
    # Pull the candidate back inside the ball if solver slack pushed it out.
    lam, base = 1e-9, cand
    while _distance(cand, r, ball) > epsilon and lam < 1:
        cand = (1 - lam) * base + lam * r
        lam *= 2
    value = dmax(cand, s)
    sdp = math.log2(max(float(t.value), 1e-300))
    return DivergenceResult(value.value, optimizer=cand, iterations=0,
                            residual=abs(float(value) - sdp) if not value.infinite else math.inf,
                            infinite=value.infinite)


def _distance(a, b, ball):
    from .linalg import fidelity_and_distances

    if ball == "purified":
        return fidelity_and_distances(a, b)["purified"]
    return _generalized_trace_distance(a, b)


def _solve(prob):
    import cvxpy as cp

    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.error.SolverError:
        prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200000)


def _beta_objective(w_fn, epsilon):
    def f(logx):
        x = math.exp(logx)
        return float(np.clip(w_fn(x), 0, None).sum()) + epsilon * x
    return f


def _golden(f, lo, hi, rel):
    phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > rel:
        it += 1
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x), it


def beta_and_dhypo(epsilon, rho, sigma):
    """Optimal type-II error at type-I level epsilon and the test achieving it.

    The dual value is tr[sigma] - min_x {tr[(sigma - x rho)_+] + epsilon x},
    minimized by golden-section search on log x. The primal test projects
    onto the positive part of x* rho - sigma, with the boundary eigenvector
    weighted so that the type-I error equals epsilon.
    """
    if not 0 <= epsilon <= 1:
        raise PreconditionError("epsilon must lie in [0,1]")
    r, s = hermitize(as_array(rho)), hermitize(as_array(sigma))
    n = r.shape[0]
    tr_s = _trace(s)
    if epsilon >= 1 - 1e-15 and epsilon > 0:
        M = np.zeros((n, n), complex)
        return HypothesisTest(0.0, INF, 0.0, TestOperator(M, _trace(r), 0.0))
    if epsilon == 0:
        B = support_basis(r)
        M = B @ B.conj().T
        beta = _trace(s @ M)
        dh = INF if beta <= 0 else -math.log2(beta)
        return HypothesisTest(beta, dh, math.inf, TestOperator(M, 0.0, beta))

    f = _beta_objective(lambda x: np.linalg.eigvalsh(s - x * r), epsilon)
    lo, hi = math.log(tol.get("beta_bracket_lo")), math.log(tol.get("beta_bracket_hi"))
    rel = tol.get("golden")
    for widen in range(2):
        logx, fmin, its = _golden(f, lo, hi, rel)
        edge = min(logx - lo, hi - logx) < 10 * rel
        if not edge:
            break
        if widen == 1:
            raise ConvergenceError("optimal threshold lies at the bracket edge", residual=fmin)
        lo, hi = lo - math.log(1e6), hi + math.log(1e6)
    # Golden section resolves the minimizer only to about sqrt(machine eps);
    # bisect the sign of the slope to pin the threshold down.
    step = max(10 * rel, 1e-6)
    a, b = logx - step, logx + step
    if _threshold_slope(r, s, math.exp(a), epsilon) < 0 < _threshold_slope(r, s, math.exp(b), epsilon):
        for _ in range(80):
            mid = (a + b) / 2
            if _threshold_slope(r, s, math.exp(mid), epsilon) < 0:
                a = mid
            else:
                b = mid
        logx = (a + b) / 2
        fmin = min(fmin, f(logx))
    x = math.exp(logx)
    beta = tr_s - fmin
    M = _neyman_pearson_test(r, s, x, epsilon)
    type1 = _trace(r) - _trace(r @ M)
    type2 = _trace(s @ M)
    beta = max(beta, 0.0)
    dh = INF if beta <= 0 else -math.log2(beta)
    return HypothesisTest(beta, dh, x, TestOperator(M, type1, type2), its)


def _neyman_pearson_test(r, s, x, epsilon):
    w, U = eigh(x * r - s)
    a = np.real(np.einsum("ij,ji->i", U.conj().T @ r, U))
    scale = max(np.abs(w).max(), 1e-300)
    m = np.where(w > 0, 1.0, 0.0)
    excess = a @ (1 - m) - epsilon
    if abs(excess) > 1e-15:
        # Randomize on the eigenspace nearest to zero on the side that moves
        # the type-I error towards epsilon.
        side = (w <= 0) if excess > 0 else (w > 0)
        if side.any():
            j = np.flatnonzero(side)[np.argmin(np.abs(w[side]))]
            group = side & (np.abs(w - w[j]) <= 1e-9 * scale)
            weight = a[group].sum()
            if weight > 0:
                shift = np.clip(excess / weight, -1.0, 1.0)
                m[group] = m[group] + shift
    return from_eig(np.clip(m, 0.0, 1.0), U)


def _threshold_slope(r, s, x, epsilon):
    w, U = eigh(s - x * r)
    a = np.real(np.einsum("ij,ji->i", U.conj().T @ r, U))
    return epsilon - a[w > 0].sum()


def ns_distributions(rho, sigma):
    """Classical pair whose Renyi divergences reproduce the Petz divergences."""
    wr, Ur = eigh(as_array(rho))
    ws, Us = eigh(as_array(sigma))
    wr, ws = np.clip(wr, 0, None), np.clip(ws, 0, None)
    overlap = np.abs(Ur.conj().T @ Us) ** 2
    P = (wr[:, None] * overlap).ravel()
    Q = (ws[None, :] * overlap).ravel()
    return P, Q


def classical_renyi(alpha, P, Q):
    P, Q = np.asarray(P, float), np.asarray(Q, float)
    keep = P > 0
    if alpha > 1 and np.any(Q[keep] <= 0):
        return INF
    both = keep & (Q > 0)
    s = float(np.sum(P[both] ** alpha * Q[both] ** (1 - alpha)))
    if s <= 0:
        return INF
    return math.log2(s) / (alpha - 1)


def classical_kl(P, Q):
    P, Q = np.asarray(P, float), np.asarray(Q, float)
    keep = P > 0
    if np.any(Q[keep] <= 0):
        return INF
    return float(np.sum(P[keep] * np.log2(P[keep] / Q[keep])))


@dataclass
class ContinuityEnvelope:
    eta: float
    eta_above: float
    lower_gap: float
    upper_gap: float
    window_ok: bool
    below: bool
    holds: Any = None


def continuity_envelopes(rho, sigma, alpha):
    """Explicit continuity of Renyi divergences around alpha = 1.

    Below 1 the envelope reads 0 <= D - D_petz(alpha) <= (1-alpha) (log eta)^2;
    above 1 it reads D_sand(alpha) <= D + (alpha-1) (log eta')^2. ``lower_gap``
    and ``upper_gap`` are the measured gap and the bound. Outside the window
    nothing is asserted and ``holds`` is None.
    """
    p32 = petz(1.5, rho, sigma)
    p12 = petz(0.5, rho, sigma)
    if p32.infinite or p12.infinite:
        return ContinuityEnvelope(math.inf, math.inf, math.nan, math.inf, False, alpha < 1)
    a, b = float(p32), float(p12)
    eta = max(4.0, 2 ** (2 * a) + 2 ** (-2 * b) + 1) ** 2
    eta_above = max(4.0, 2 ** a + 2 ** (-b) + 1) ** 2
    D = float(umegaki(rho, sigma))
    if alpha < 1:
        L = math.log2(eta)
        window = 1 - 1 / L < alpha < 1
        gap = D - float(petz(alpha, rho, sigma))
        bound = (1 - alpha) * L ** 2
    else:
        L = math.log2(eta_above)
        window = 1 < alpha < 1 + 1 / L
        gap = float(sandwiched(alpha, rho, sigma)) - D
        bound = (alpha - 1) * L ** 2
    holds = None
    if window:
        slack = 1e-8
        holds = gap <= bound + slack and (alpha > 1 or gap >= -slack)
    return ContinuityEnvelope(eta, eta_above, gap, bound, window, alpha < 1, holds)
