"""Divergences between two sets of states.

Each solver produces a value together with members of both sets that attain
it and, where a dual program exists, a dual operator certifying a bound from
the other side. The primal problems (infimum over pairs of a jointly convex
pair divergence) are solved by block Frank-Wolfe with away steps and exact
line search, calling the sets only through their linear oracles.
"""

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import tolerances as tol
from .divergences import _check_alpha, _solve, beta_and_dhypo, dmax, umegaki
from .errors import PreconditionError
from .infinity import INF, is_inf
from .linalg import LN2, as_array, eigh, from_eig, hermitize, kron, loewner, support_projector
from .measured import ExpTerms, ascend, dm, dm_alpha, regime
from .sets import StateSet


@dataclass
class SetDivergenceResult:
    value: Any
    rho_witness: Any = None
    sigma_witness: Any = None
    dual_witness: Any = None
    gap: float = 0.0
    heuristic: bool = False
    iterations: int = 0
    lower: Any = None
    upper: Any = None
    infinite: bool = False

    def __float__(self):
        return math.inf if self.infinite else float(self.value)


def _inf_result(rho=None, sigma=None):
    return SetDivergenceResult(INF, rho, sigma, infinite=True, lower=INF, upper=INF)


def _check_pair(A, B):
    if A.dim != B.dim:
        raise PreconditionError(f"sets act on dimensions {A.dim} and {B.dim}")


def _tr(X, Y):
    return float(np.real(np.einsum("ij,ji->", X, Y)))


# --- block Frank-Wolfe ----------------------------------------------------

class _Block:
    """Iterate of one set, kept as a convex combination of oracle outputs."""

    def __init__(self, S, x0):
        self.S = S
        self.atoms = [hermitize(x0)]
        self.weights = np.array([1.0])
        self.fixed = S.kind == "singleton"
        # away steps pay off on polytopes; elsewhere the atom list is folded
        # back into the current point once it grows
        self.polytope = S.kind in ("hull", "incoherent")
        self._x = self.atoms[0]

    @property
    def x(self):
        return self._x

    def _refresh(self):
        if not self.polytope and len(self.atoms) > 64:
            self.atoms = [sum(w * a for w, a in zip(self.weights, self.atoms))]
            self.weights = np.array([1.0])
        self._x = sum(w * a for w, a in zip(self.weights, self.atoms))

    def directions(self, g):
        """FW and away directions for gradient g, with their gaps."""
        x = self.x
        gx = _tr(g, x)
        lmo = self.S.min_linear(g)
        fw_gap = gx - lmo.value
        away_gap, away_i = -np.inf, None
        if len(self.atoms) > 1:
            vals = [_tr(g, a) for a in self.atoms]
            away_i = int(np.argmax(vals))
            away_gap = vals[away_i] - gx
        return lmo, fw_gap, away_gap, away_i

    def fw_step(self, s, gamma):
        self.weights = self.weights * (1 - gamma)
        for i, a in enumerate(self.atoms):
            if np.abs(a - s).max() <= 1e-12:
                self.weights[i] += gamma
                break
        else:
            self.atoms.append(hermitize(s))
            self.weights = np.append(self.weights, gamma)
        self._prune()

    def away_step(self, i, gamma):
        self.weights = self.weights * (1 + gamma)
        self.weights[i] -= gamma
        self._prune()

    def _prune(self):
        keep = self.weights > 1e-13
        self.atoms = [a for a, k in zip(self.atoms, keep) if k]
        self.weights = self.weights[keep] / self.weights[keep].sum()
        self._refresh()


def _block_fw(evaluate, A, B, rho0, sigma0, max_iter, gap_tol):
    """Minimize a jointly convex phi(rho, sigma) over A x B.

    ``evaluate(rho, sigma)`` returns ``(phi, grad_rho, grad_sigma)``. Returns
    the blocks, final value, best certified lower bound and iteration count.
    """
    blocks = [_Block(A, rho0), _Block(B, sigma0)]
    phi, g_r, g_s = evaluate(blocks[0].x, blocks[1].x)
    if not np.isfinite(phi):
        return blocks, phi, -np.inf, 0
    lower = -np.inf
    it = 0
    stall = 0
    L = [1.0, 1.0]
    for it in range(1, max_iter + 1):
        info = []
        total = 0.0
        for b, g in zip(blocks, (g_r, g_s)):
            if b.fixed:
                info.append(None)
                continue
            lmo, fw_gap, away_gap, away_i = b.directions(g)
            total += max(fw_gap, 0.0) + (lmo.gap or 0.0)
            info.append((lmo, fw_gap, away_gap, away_i))
        lower = max(lower, phi - total)
        if total <= gap_tol or all(i is None for i in info):
            break
        # step the block and direction with the largest first-order decrease
        best = None
        for j, item in enumerate(info):
            if item is None:
                continue
            lmo, fw_gap, away_gap, away_i = item
            if best is None or fw_gap > best[0]:
                best = (fw_gap, j, "fw", lmo.witness, 1.0)
            if away_gap > best[0]:
                w = blocks[j].weights[away_i]
                best = (away_gap, j, "away", away_i, w / (1 - w))
        gain, j, kind, arg, gmax = best
        b = blocks[j]
        x = b.x
        d = (arg - x) if kind == "fw" else (x - b.atoms[arg])
        dn2 = float(np.real(np.vdot(d, d)))
        pts = [blk.x for blk in blocks]
        # adaptive step: shrink the curvature estimate, double it until the
        # quadratic upper model certifies sufficient decrease
        L[j] = max(L[j] * 0.5, 1e-12)
        accepted = False
        for _ in range(60):
            gamma = min(gain / (L[j] * dn2), gmax) if dn2 > 0 else gmax
            pts[j] = x + gamma * d
            val = evaluate(*pts, value_only=True)
            if np.isfinite(val) and val <= phi - gamma * gain + 0.5 * gamma ** 2 * L[j] * dn2:
                accepted = True
                break
            L[j] *= 2
        if not accepted or gamma <= 0:
            stall += 1
            if stall >= 3:
                break
            continue
        stall = 0
        if kind == "fw":
            b.fw_step(arg, gamma)
        else:
            b.away_step(arg, gamma)
        new_phi, g_r, g_s = evaluate(blocks[0].x, blocks[1].x)
        phi = new_phi
    return blocks, phi, lower, it


def _start_points(A, B, start):
    if start is not None:
        return hermitize(as_array(start[0])), hermitize(as_array(start[1]))
    rho0 = A.canonical_member()
    sigma0 = B.canonical_member()
    if not is_inf(umegaki(rho0, sigma0).value):
        return rho0, sigma0
    # bring the support of sigma over that of rho
    hit = B.max_linear(support_projector(rho0)).witness
    return rho0, (sigma0 + hit) / 2


def _log_clipped(w):
    return np.log(np.maximum(w, 1e-30))


# --- relative entropy between sets ----------------------------------------

def _umegaki_evaluator():
    def evaluate(rho, sigma, value_only=False):
        v = umegaki(rho, sigma)
        if v.infinite:
            return np.inf if value_only else (np.inf, None, None)
        if value_only:
            return float(v.value)
        wr, Ur = np.linalg.eigh(hermitize(rho))
        ws, Us = np.linalg.eigh(hermitize(sigma))
        ln_r = from_eig(_log_clipped(wr), Ur)
        ln_s = from_eig(_log_clipped(ws), Us)
        g_r = (ln_r - ln_s + np.eye(len(wr))) / LN2
        K = loewner(np.maximum(ws, 1e-30), _log_clipped(ws), 1 / np.maximum(ws, 1e-30))
        g_s = -(Us @ (K * (Us.conj().T @ rho @ Us)) @ Us.conj().T) / LN2
        return float(v.value), g_r, g_s
    return evaluate


def d_sets(A: StateSet, B: StateSet, start=None, max_iter=None):
    """Relative entropy between two sets: inf over members of D(rho||sigma), in bits.

    ``value`` is the attained primal value; ``lower`` is the Frank-Wolfe
    certified lower bound and ``gap`` their difference.
    """
    _check_pair(A, B)
    rho0, sigma0 = _start_points(A, B, start)
    max_iter = tol.get("fw_max_iter") if max_iter is None else max_iter
    blocks, phi, lower, it = _block_fw(_umegaki_evaluator(), A, B, rho0, sigma0,
                                       max_iter, tol.get("alternating"))
    rho, sigma = blocks[0].x, blocks[1].x
    if not np.isfinite(phi):
        return _inf_result(rho, sigma)
    return SetDivergenceResult(phi, rho, sigma, None, max(phi - lower, 0.0), False, it,
                               lower=lower, upper=phi)


def _pow_gradient(sigma, G, gamma):
    """Frechet derivative of sigma -> sigma**gamma applied to G."""
    w, U = np.linalg.eigh(hermitize(sigma))
    w = np.maximum(w, 1e-30)
    K = loewner(w, w ** gamma, gamma * w ** (gamma - 1))
    return U @ (K * (U.conj().T @ G @ U)) @ U.conj().T


def _sandwiched_evaluator(alpha):
    """phi = +Q (alpha > 1, jointly convex) or -Q (alpha < 1, jointly concave Q)."""
    sign = 1.0 if alpha > 1 else -1.0
    gam = (1 - alpha) / (2 * alpha)

    def evaluate(rho, sigma, value_only=False):
        ws, Us = np.linalg.eigh(hermitize(sigma))
        if alpha > 1 and np.abs(Us[:, ws <= 1e-14 * ws.max()].conj().T @ rho).max(initial=0) > 1e-9:
            return np.inf if value_only else (np.inf, None, None)
        S = from_eig(np.where(ws > 1e-14 * ws.max(), np.maximum(ws, 1e-300), 0.0) ** gam
                     if gam > 0 else _pinv_power(ws, gam), Us)
        Z = hermitize(S @ rho @ S)
        wz, Uz = np.linalg.eigh(Z)
        wz = np.clip(wz, 0, None)
        Q = float(np.sum(wz ** alpha))
        if value_only:
            return sign * Q
        pos = wz > 1e-14 * max(wz.max(), 1e-300)
        zp = np.zeros_like(wz)
        zp[pos] = wz[pos] ** (alpha - 1)
        Zp = from_eig(zp, Uz)
        g_r = alpha * S @ Zp @ S
        G = alpha * (rho @ S @ Zp + Zp @ S @ rho)
        g_s = _pow_gradient(sigma, hermitize(G), gam)
        return sign * Q, sign * hermitize(g_r), sign * hermitize(g_s)
    return evaluate


def _pinv_power(w, p):
    out = np.zeros_like(w)
    pos = w > 1e-14 * max(w.max(), 1e-300)
    out[pos] = w[pos] ** p
    return out


def sandwiched_sets(alpha, A: StateSet, B: StateSet, start=None, max_iter=None):
    """Sandwiched Renyi divergence between sets (alpha in [1/2,1) or > 1), in bits.

    The primal optimizes the trace functional Q, which is jointly concave below
    one and jointly convex above one; only the primal value is reported.
    """
    _check_alpha(alpha)
    if alpha < 0.5:
        raise PreconditionError("sandwiched divergence between sets needs alpha >= 1/2")
    _check_pair(A, B)
    rho0, sigma0 = _start_points(A, B, start)
    max_iter = tol.get("fw_max_iter") if max_iter is None else max_iter
    blocks, phi, lower, it = _block_fw(_sandwiched_evaluator(alpha), A, B, rho0, sigma0,
                                       max_iter, 1e-10)
    if not np.isfinite(phi) or phi == 0:
        return _inf_result(blocks[0].x, blocks[1].x)
    Q = abs(phi)
    value = math.log2(Q) / (alpha - 1)
    return SetDivergenceResult(value, blocks[0].x, blocks[1].x, None, 0.0, False, it, upper=value)


def _petz_evaluator(alpha):
    """phi = -Q (alpha < 1, Q jointly concave) or +Q (1 < alpha <= 2, jointly convex)."""
    sign = 1.0 if alpha > 1 else -1.0

    def evaluate(rho, sigma, value_only=False):
        wr, Ur = np.linalg.eigh(hermitize(rho))
        ws, Us = np.linalg.eigh(hermitize(sigma))
        if alpha > 1:
            kern = Us[:, ws <= 1e-14 * max(ws.max(), 1e-300)]
            if np.abs(kern.conj().T @ rho @ kern).max(initial=0) > 1e-9:
                return np.inf if value_only else (np.inf, None, None)
        ra = from_eig(_pinv_power(np.clip(wr, 0, None), alpha), Ur)
        sb = from_eig(_pinv_power(np.clip(ws, 0, None), 1 - alpha), Us)
        Q = _tr(ra, sb)
        if value_only:
            return sign * Q
        g_r = _pow_gradient(rho, sb, alpha)
        g_s = _pow_gradient(sigma, ra, 1 - alpha)
        return sign * Q, sign * hermitize(g_r), sign * hermitize(g_s)
    return evaluate


def petz_sets(alpha, A: StateSet, B: StateSet, start=None, max_iter=None):
    """Petz Renyi divergence between sets for alpha in (0,1) or (1,2], in bits.

    In this range the trace functional is jointly concave (below one) or
    jointly convex (above one), so Frank-Wolfe on it reaches the optimum.
    """
    _check_alpha(alpha)
    if alpha > 2:
        raise PreconditionError("Petz divergence between sets needs alpha <= 2")
    _check_pair(A, B)
    rho0, sigma0 = _start_points(A, B, start)
    max_iter = tol.get("fw_max_iter") if max_iter is None else max_iter
    blocks, phi, _, it = _block_fw(_petz_evaluator(alpha), A, B, rho0, sigma0, max_iter, 1e-11)
    if not np.isfinite(phi) or phi == 0:
        return _inf_result(blocks[0].x, blocks[1].x)
    value = math.log2(abs(phi)) / (alpha - 1)
    return SetDivergenceResult(value, blocks[0].x, blocks[1].x, None, 0.0, False, it, upper=value)


# --- measured divergences between sets --------------------------------------

def _ln_on(W):
    w, U = np.linalg.eigh(hermitize(W))
    return from_eig(_log_clipped(w), U)


class _MeasuredProgram:
    """Primal pair evaluation and dual objective for D_M (alpha=None) or D_{M,alpha}."""

    def __init__(self, A, B, alpha=None):
        self.A, self.B, self.alpha = A, B, alpha
        self.warm = None
        if alpha is not None:
            self.kind = regime(alpha)
            self.p = (alpha - 1) / alpha

    # primal ------------------------------------------------------------
    def pair(self, rho, sigma):
        S0 = None if self.warm is None else self.warm
        if self.alpha is None:
            r = dm(rho, sigma, S0)
        else:
            r = dm_alpha(self.alpha, rho, sigma, S0)
        return r

    def evaluate(self, rho, sigma, value_only=False):
        r = self.pair(rho, sigma)
        if r.infinite:
            return np.inf if value_only else (np.inf, None, None)
        W = r.witness_omega
        self.warm = _ln_on(W + 1e-300 * np.eye(len(W)))
        a = self.alpha
        if a is None:
            phi = float(r.value)
            if value_only:
                return phi
            return phi, _ln_on(W) / LN2, -W / LN2
        Q = 2.0 ** ((a - 1) * float(r.value))
        sign = -1.0 if a < 1 else 1.0
        if value_only:
            return sign * Q
        w, U = np.linalg.eigh(hermitize(W))
        w = np.maximum(w, 1e-300)
        if self.kind == "low":
            g_r, g_s = a * W, (1 - a) * from_eig(w ** (a / (a - 1)), U)
        else:
            g_r, g_s = a * from_eig(w ** self.p, U), (1 - a) * W
        return sign * Q, sign * g_r, sign * g_s

    def bits(self, phi):
        if self.alpha is None:
            return phi
        return math.log2(abs(phi)) / (self.alpha - 1)

    # dual --------------------------------------------------------------
    def dual(self, S, certified=False):
        """Lower bound (bits) on the set divergence from the operator exp(S),
        and its gradient in S. With ``certified`` the oracle gaps are charged
        against the bound."""
        A, B, a = self.A, self.B, self.alpha
        E = ExpTerms(S)
        if a is None:
            hb = B.max_linear(E.power(1.0))
            hbv = hb.value + (hb.gap if certified else 0.0)
            if hbv <= 0:
                return -np.inf, None
            c = math.log(hbv)
            ha = A.min_linear(S - c * np.eye(len(S)))
            val = ha.value - (ha.gap if certified else 0.0)
            trr = np.trace(ha.witness).real
            grad = ha.witness - trr * E.grad(hb.witness, 1.0) / hbv
            return val / LN2, grad / LN2
        p = self.p
        if self.kind == "low":
            ca, cb = 1.0, a / (a - 1)
        else:
            ca, cb = p, 1.0
        Xa = E.power(ca)
        Xb = E.power(cb)
        if self.kind == "above":
            ha = A.min_linear(Xa)
            hav = ha.value - (ha.gap if certified else 0.0)
        else:
            ha = A.max_linear(Xa)
            hav = ha.value + (ha.gap if certified else 0.0)
        hb = B.max_linear(Xb)
        hbv = hb.value + (hb.gap if certified else 0.0)
        if hav <= 0 or hbv <= 0:
            return -np.inf, None
        J = a * math.log(hav) + (1 - a) * math.log(hbv)
        gJ = a * E.grad(ha.witness, ca) / hav + (1 - a) * E.grad(hb.witness, cb) / hbv
        scale = 1.0 / ((a - 1) * LN2)
        return J * scale, gJ * scale

    def normalized_witness(self, S):
        """exp(S) rescaled into the feasible region of the dual program."""
        a = self.alpha
        E = ExpTerms(S)
        if a is None:
            W = E.power(1.0)
            return W / self.B.max_linear(W).value
        # the Renyi dual objectives are invariant under rescaling W
        return E.power(1.0)


def _measured_sets(A, B, alpha, dual_start, max_iter, primal, start=None):
    _check_pair(A, B)
    prog = _MeasuredProgram(A, B, alpha)
    d = A.dim
    rho0, sigma0 = _start_points(A, B, start)
    it = 0
    upper = None
    blocks = [_Block(A, rho0), _Block(B, sigma0)]
    if primal:
        max_iter = tol.get("measured_fw_max_iter") if max_iter is None else max_iter
        blocks, phi, _, it = _block_fw(prog.evaluate, A, B, rho0, sigma0, max_iter,
                                       tol.get("set_gap") * 1e-2)
        if not np.isfinite(phi):
            return _inf_result(blocks[0].x, blocks[1].x)
        upper = prog.bits(phi)
    starts = []
    if dual_start is not None:
        starts.append(_ln_on(as_array(dual_start)))
    if prog.warm is not None:
        starts.append(prog.warm)
    if not starts:
        starts.append(np.zeros((d, d), complex))

    best_val, best_S = -np.inf, None
    for S0 in starts:
        v0, _ = prog.dual(S0, certified=True)
        if v0 > best_val:
            best_val, best_S = v0, S0
    if best_S is not None:
        def objective(S):
            v, g = prog.dual(S)
            if g is None:
                return -1e300, np.zeros_like(S)
            return v, g
        S, _, its, _ = ascend(objective, best_S, maximize=True, max_iter=500)
        it += its
        v, _ = prog.dual(S, certified=True)
        if v > best_val:
            best_val, best_S = v, S
    if not np.isfinite(best_val):
        return _inf_result(blocks[0].x, blocks[1].x)
    W = prog.normalized_witness(best_S)
    gap = max(upper - best_val, 0.0) if upper is not None else math.nan
    if upper is not None and upper < best_val:
        # primal/dual crossing beyond rounding signals an oracle problem; keep it visible
        gap = best_val - upper
    return SetDivergenceResult(best_val, blocks[0].x, blocks[1].x, W, gap, False, it,
                               lower=best_val, upper=upper)


def dm_sets(A: StateSet, B: StateSet, dual_start=None, max_iter=None, primal=True, start=None):
    """Measured relative entropy between sets, in bits.

    ``value`` is the certified dual lower bound attained by ``dual_witness``
    (an operator W > 0 with h_B(W) <= 1); ``upper`` is the primal value of the
    returned members and ``gap`` their difference. ``dual_start`` seeds the
    dual ascent, e.g. with a tensor product of witnesses of smaller instances.
    """
    return _measured_sets(A, B, None, dual_start, max_iter, primal, start)


def dm_alpha_sets(alpha, A: StateSet, B: StateSet, dual_start=None, max_iter=None, primal=True,
                  start=None):
    """Measured Renyi divergence of order alpha between sets, in bits.

    The dual operator W is optimized through the scale-free form of the
    program for the regime of alpha; ``value`` is the certified lower bound.
    """
    _check_alpha(alpha)
    if alpha > tol.get("alpha_max"):
        raise PreconditionError(f"alpha above {tol.get('alpha_max')} is not supported")
    return _measured_sets(A, B, alpha, dual_start, max_iter, primal, start)


# --- max-relative entropy -------------------------------------------------

def _dmax_state_to_set(rho, B):
    import cvxpy as cp

    d = B.dim
    t = cp.Variable()
    Sigma = cp.Variable((d, d), hermitian=True)
    dom = Sigma - rho >> 0
    prob = cp.Problem(cp.Minimize(t), [dom] + B.cone_constraints(cp, Sigma, t))
    _solve(prob)
    if prob.status in ("infeasible", "infeasible_inaccurate", "unbounded") or t.value is None:
        return _inf_result(rho)
    tv = float(t.value)
    if tv <= 0:
        return _inf_result(rho)
    Y = hermitize(dom.dual_value)
    Y = from_eig(np.clip(np.linalg.eigvalsh(Y), 0, None), np.linalg.eigh(Y)[1])
    hb = B.max_linear(Y)
    lo = _tr(Y, rho) / (hb.value + hb.gap) if hb.value + hb.gap > 0 else 0.0
    sigma = hermitize(Sigma.value) / tv
    upper = math.log2(tv)
    lower = math.log2(lo) if lo > 0 else -np.inf
    return SetDivergenceResult(upper, rho, sigma, Y, max(upper - lower, 0.0), False, 1,
                               lower=lower, upper=upper)


def dmax_smoothed_to_set(epsilon, rho, B: StateSet):
    """min of D_max(rho'||B) over density operators rho' within trace distance
    epsilon of rho, in bits. Returns the result with ``rho_witness`` = rho'."""
    import cvxpy as cp

    if not 0 <= epsilon < 1:
        raise PreconditionError("epsilon must lie in [0,1)")
    rho = hermitize(as_array(rho))
    d = B.dim
    t = cp.Variable()
    Sigma = cp.Variable((d, d), hermitian=True)
    R = cp.Variable((d, d), hermitian=True)
    P = cp.Variable((d, d), hermitian=True)
    N = cp.Variable((d, d), hermitian=True)
    cons = [Sigma - R >> 0, R >> 0, cp.real(cp.trace(R)) == 1, P >> 0, N >> 0,
            R - rho == P - N, cp.real(cp.trace(P + N)) <= 2 * epsilon]
    prob = cp.Problem(cp.Minimize(t), cons + B.cone_constraints(cp, Sigma, t))
    _solve(prob)
    if t.value is None or prob.status in ("infeasible", "unbounded"):
        return _inf_result(rho)
    r = hermitize(R.value)
    w, U = np.linalg.eigh(r)
    r = from_eig(np.clip(w, 0, None), U)
    r = r / np.trace(r).real
    exact = _dmax_state_to_set(r, B)
    exact.gap = abs(float(exact) - math.log2(max(float(t.value), 1e-300)))
    return exact


def dmax_sets(rho_or_A, B: StateSet, restarts=3, seed=0):
    """Max-relative entropy from a state (or a set of states) to the set B, in bits.

    For a single state the conic program min t s.t. rho <= Sigma, Sigma in t*B
    is solved directly. For a set A the supremum over members is exact when A
    is a singleton or a hull (generators are enumerated); otherwise a
    best-response iteration is used and the result is flagged heuristic.
    """
    if not isinstance(rho_or_A, StateSet):
        rho = hermitize(as_array(rho_or_A))
        if rho.shape[0] != B.dim:
            raise PreconditionError("state and set dimensions differ")
        return _dmax_state_to_set(rho, B)
    A = rho_or_A
    _check_pair(A, B)
    if A.kind in ("singleton", "hull"):
        results = [_dmax_state_to_set(g, B) for g in A.generators]
        return max(results, key=lambda r: float(r))
    from .sampling import rng_from, random_hermitian

    rng = rng_from(seed)
    best = None
    for k in range(restarts):
        rho = A.canonical_member() if k == 0 else A.max_linear(random_hermitian(A.dim, rng)).witness
        cur = _dmax_state_to_set(rho, B)
        for _ in range(50):
            if cur.infinite or cur.dual_witness is None:
                break
            nxt = _dmax_state_to_set(A.max_linear(cur.dual_witness).witness, B)
            if float(nxt) <= float(cur) + 1e-9:
                break
            cur = nxt
        if best is None or float(cur) > float(best):
            best = cur
    best.heuristic = True
    return best


# --- hypothesis testing ---------------------------------------------------

def dhypo_sets(epsilon, A: StateSet, B: StateSet):
    """Hypothesis-testing relative entropy between sets, in bits.

    Solves beta = min h_B(M) over tests 0 <= M <= I with h_A(I - M) <= epsilon
    as a semidefinite program built from each set's support-function
    description. The members recovered from the dual multipliers form a pair
    whose own optimal error (computed by the pairwise routine) certifies the
    bound from the other side; ``gap`` is the difference in bits.
    """
    import cvxpy as cp

    if not 0 < epsilon < 1:
        raise PreconditionError("epsilon must lie in (0,1)")
    _check_pair(A, B)
    d = A.dim
    eye = np.eye(d)
    M = cp.Variable((d, d), hermitian=True)
    t = cp.Variable()
    cons_b, rec_b = B.support_le(cp, M, t)
    cons_a, rec_a = A.support_le(cp, eye - M, epsilon)
    prob = cp.Problem(cp.Minimize(t), [M >> 0, M << eye] + cons_b + cons_a)
    _solve(prob)
    Mv = hermitize(M.value)
    w, U = np.linalg.eigh(Mv)
    Mv = from_eig(np.clip(w, 0, 1), U)
    beta_primal = B.max_linear(Mv).value
    rho, sigma = rec_a(cons_a), rec_b(cons_b)
    pair = beta_and_dhypo(epsilon, rho, sigma)
    beta = pair.beta
    if beta <= 0:
        return SetDivergenceResult(INF, rho, sigma, Mv, 0.0, False, 1, infinite=True)
    value = -math.log2(beta)
    upper_beta = max(beta_primal, 1e-300)
    gap = abs(value + math.log2(upper_beta))
    return SetDivergenceResult(value, rho, sigma, Mv, gap, False, 1,
                               lower=-math.log2(upper_beta), upper=value)


# --- additivity harnesses -------------------------------------------------

@dataclass
class AdditivityReport:
    m: int
    k: int
    d_m: float
    d_k: float
    d_mk: float
    difference: float
    ok: bool
    tag: str = "measured"


def _check_mk(m, k):
    if m < 1 or k < 1:
        raise PreconditionError("m and k must be positive")


def superadditivity_check(Afam, Bfam, m, k, alpha=None, slack=None, max_iter=None, joint_iter=60):
    """D(A_{m+k}||B_{m+k}) - D(A_m||B_m) - D(A_k||B_k) >= -slack for the measured
    divergence (or its Renyi version when ``alpha`` is given).

    The (m+k)-copy primal starts from the product of the smaller optimizers
    and the dual from the product of the smaller dual witnesses, so the
    reported (m+k)-copy value is never below the sum of the smaller ones by
    more than rounding when the support function is multiplicative. The
    (m+k)-copy primal runs for at most ``joint_iter`` steps; its value stays a
    certified lower bound whatever the budget.
    """
    _check_mk(m, k)
    slack = tol.get("superadditivity") if slack is None else slack

    def solve(n, dual_start=None, start=None, budget=max_iter):
        if alpha is None:
            return dm_sets(Afam.at(n), Bfam.at(n), dual_start, budget, start=start)
        return dm_alpha_sets(alpha, Afam.at(n), Bfam.at(n), dual_start, budget, start=start)

    rm = solve(m)
    rk = rm if k == m else solve(k)
    rmk = solve(m + k, np.kron(rm.dual_witness, rk.dual_witness),
                (np.kron(rm.rho_witness, rk.rho_witness), np.kron(rm.sigma_witness, rk.sigma_witness)),
                joint_iter)
    diff = float(rmk) - float(rm) - float(rk)
    tag = "measured" if alpha is None else f"measured_alpha={alpha}"
    return AdditivityReport(m, k, float(rm), float(rk), float(rmk), diff, diff >= -slack, tag)


def subadditivity_check(Afam, Bfam, tag, m, k, alpha=None, slack=None):
    """D(A_{m+k}||B_{m+k}) <= D(A_m||B_m) + D(A_k||B_k) + slack for
    ``tag`` in {"umegaki", "sandwiched", "dmax"}.

    The (m+k)-copy primal starts from the product of the smaller optimizers.
    """
    _check_mk(m, k)
    slack = tol.get("superadditivity") if slack is None else slack

    if tag == "umegaki":
        def solve(n, start=None):
            return d_sets(Afam.at(n), Bfam.at(n), start=start)
    elif tag == "sandwiched":
        if alpha is None:
            raise PreconditionError("sandwiched tag needs alpha")

        def solve(n, start=None):
            return sandwiched_sets(alpha, Afam.at(n), Bfam.at(n), start=start)
    elif tag == "dmax":
        def solve(n, start=None):
            return dmax_sets(Afam.at(n), Bfam.at(n))
    else:
        raise PreconditionError(f"unknown divergence tag {tag!r}")
    rm = solve(m)
    rk = rm if k == m else solve(k)
    start = None
    if rm.rho_witness is not None and rk.rho_witness is not None and tag != "dmax":
        start = (np.kron(rm.rho_witness, rk.rho_witness), np.kron(rm.sigma_witness, rk.sigma_witness))
    rmk = solve(m + k, start)
    diff = float(rmk) - float(rm) - float(rk)
    return AdditivityReport(m, k, float(rm), float(rk), float(rmk), diff, diff <= slack, tag)
