"""Dense Hermitian linear algebra.

Functions accept plain ``numpy`` arrays or :class:`HermitianOperator` values
and return arrays. The operator classes exist to validate inputs and to carry
subsystem dimensions through serialization.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import tolerances as tol
from .errors import PreconditionError, ResourceLimitError, SingularOperatorError

LN2 = math.log(2.0)


def as_array(X):
    if hasattr(X, "matrix"):
        return X.matrix
    return np.asarray(X, dtype=complex)


def dims_of(X, dims=None):
    if dims is not None:
        return tuple(int(d) for d in dims)
    if hasattr(X, "dims"):
        return tuple(X.dims)
    return (as_array(X).shape[0],)


def hermitize(X):
    X = np.asarray(X, dtype=complex)
    return (X + X.conj().T) / 2


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """A Hermitian matrix together with the dimensions of its tensor factors."""

    matrix: np.ndarray
    dims: tuple = None

    def __post_init__(self):
        M = np.array(self.matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise PreconditionError(f"expected a square matrix, got shape {M.shape}")
        scale = max(1.0, np.abs(M).max(initial=0.0))
        if np.abs(M - M.conj().T).max(initial=0.0) > 1e3 * tol.get("hermitian") * scale:
            raise PreconditionError("matrix is not Hermitian")
        M = (M + M.conj().T) / 2
        M.setflags(write=False)
        dims = (M.shape[0],) if self.dims is None else tuple(int(d) for d in self.dims)
        if math.prod(dims) != M.shape[0]:
            raise PreconditionError(f"factor dims {dims} do not multiply to {M.shape[0]}")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def to_json(self, exact=False):
        encode = float.hex if exact else float
        doc = {
            "dim": self.dim,
            "factors": list(self.dims),
            "re": [[encode(float(v)) for v in row] for row in self.matrix.real],
            "im": [[encode(float(v)) for v in row] for row in self.matrix.imag],
        }
        if exact:
            doc["encoding"] = "hex"
        return doc

    @classmethod
    def from_json(cls, doc):
        return cls(*_parse_operator(doc))


def _parse_operator(doc, where="$"):
    if not isinstance(doc, dict):
        raise PreconditionError(f"{where}: expected an object")
    for key in ("dim", "re"):
        if key not in doc:
            raise PreconditionError(f"{where}.{key}: missing")
    decode = float.fromhex if doc.get("encoding") == "hex" else float
    try:
        re = np.array([[decode(v) for v in row] for row in doc["re"]], dtype=float)
    except (TypeError, ValueError) as exc:
        raise PreconditionError(f"{where}.re: {exc}") from None
    try:
        im = doc.get("im")
        im = np.zeros_like(re) if im is None else np.array(
            [[decode(v) for v in row] for row in im], dtype=float)
    except (TypeError, ValueError) as exc:
        raise PreconditionError(f"{where}.im: {exc}") from None
    n = doc["dim"]
    if not isinstance(n, int) or re.shape != (n, n) or im.shape != (n, n):
        raise PreconditionError(f"{where}.dim: entries are not {n}x{n}")
    factors = doc.get("factors") or [n]
    if math.prod(factors) != n:
        raise PreconditionError(f"{where}.factors: product is not {n}")
    return re + 1j * im, tuple(factors)


class DensityOperator(HermitianOperator):
    """A positive semidefinite operator with trace 1, or at most 1 when
    ``subnormalized`` is set. Eigenvalues within the floor below zero are clipped."""

    def __init__(self, matrix, dims=None, subnormalized=False):
        super().__init__(matrix, dims)
        object.__setattr__(self, "subnormalized", bool(subnormalized))

    def __post_init__(self):
        super().__post_init__()
        w, U = np.linalg.eigh(self.matrix)
        floor = tol.get("support_floor")
        if w.min() < -floor * max(1.0, abs(w).max()):
            raise PreconditionError(f"operator has eigenvalue {w.min():.3e} < 0")
        if w.min() < 0:
            M = (U * np.clip(w, 0, None)) @ U.conj().T
            M = (M + M.conj().T) / 2
            M.setflags(write=False)
            object.__setattr__(self, "matrix", M)

    def validate_trace(self):
        t = float(np.trace(self.matrix).real)
        floor = tol.get("support_floor")
        if self.subnormalized:
            ok = 0 < t <= 1 + floor
        else:
            ok = abs(t - 1) <= floor
        if not ok:
            raise PreconditionError(f"trace {t!r} not allowed in this mode")
        return self


def density(matrix, dims=None, subnormalized=False):
    return DensityOperator(matrix, dims, subnormalized).validate_trace()


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    def reconstruct(self):
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T


def eigh(X):
    """Ascending eigenvalues and eigenvectors of the Hermitian part of X."""
    A = hermitize(as_array(X))
    try:
        return np.linalg.eigh(A)
    except np.linalg.LinAlgError:
        from .errors import ConvergenceError
        w = np.linalg.eigvalsh(A + 1e-300)
        raise ConvergenceError("eigensolver did not converge", residual=float(np.abs(w).max()))


def eig(H):
    w, U = eigh(H)
    return SpectralDecomposition(w, U)


def floor_of(w):
    return tol.get("support_floor") * max(np.abs(w).max(initial=0.0), 1e-300)


def from_eig(w, U):
    return (U * w) @ U.conj().T


def _scalar_fn(f):
    if callable(f):
        return f, False
    if isinstance(f, tuple) and f[0] == "power":
        p = float(f[1])
        return (lambda x: np.power(x, p)), p < 0
    if isinstance(f, str) and f.startswith("power:"):
        return _scalar_fn(("power", f.split(":", 1)[1]))
    if f == "log2":
        return np.log2, True
    if f == "ln":
        return np.log, True
    if f == "positive_part":
        return (lambda x: np.maximum(x, 0.0)), False
    raise PreconditionError(f"unknown matrix function {f!r}")


def matrix_fn(H, f, clip=None, on_support=False):
    """Apply a scalar function to the eigenvalues of H.

    ``f`` is one of ``"log2"``, ``"ln"``, ``"positive_part"``, ``("power", p)``
    or a vectorized callable. Eigenvalues at or below ``clip`` (default: the
    relative support floor) count as zero. Singular functions (logarithms and
    negative powers) raise on such eigenvalues unless ``on_support`` is set, in
    which case they are mapped to zero.
    """
    w, U = eigh(H)
    fn, singular = _scalar_fn(f)
    if f == "positive_part":
        return from_eig(fn(w), U)
    cut = floor_of(w) if clip is None else float(clip)
    small = w <= cut
    if singular and small.any() and not on_support:
        raise SingularOperatorError(
            f"eigenvalue {w.min():.3e} at or below {cut:.1e} for a singular function")
    vals = np.zeros_like(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals[~small] = fn(w[~small])
    if not singular and small.any():
        vals[small] = fn(np.zeros(int(small.sum())))
    return from_eig(vals, U)


def loewner(w, fw, dfw, atol=1e-12):
    """Divided-difference matrix K[i, j] = (f(w_i) - f(w_j)) / (w_i - w_j)."""
    dw = w[:, None] - w[None, :]
    close = np.abs(dw) <= atol * np.maximum(1.0, np.abs(w)[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (fw[:, None] - fw[None, :]) / dw
    mean_d = (dfw[:, None] + dfw[None, :]) / 2
    return np.where(close, mean_d, K)


def loewner_exp(w, c=1.0):
    """Divided differences of x -> exp(c x), computed without cancellation."""
    a = c * w
    da = a[:, None] - a[None, :]
    base = np.exp(np.minimum(a[:, None], a[None, :]))
    gap = np.abs(da)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(gap > 1e-12, np.expm1(gap) / np.where(gap > 0, gap, 1.0), 1.0 + gap / 2)
    return c * base * ratio


def frechet(U, K, H):
    """Daleckii-Krein derivative U (K o U^H H U) U^H."""
    return U @ (K * (U.conj().T @ H @ U)) @ U.conj().T


def _check_cap(n):
    cap = tol.get("dim_cap")
    if n > cap:
        raise ResourceLimitError(f"dimension {n} exceeds cap {cap}")


def kron(*ops):
    """Tensor product; accepts HermitianOperator inputs and tracks factor dims
    when every input is one."""
    arrays = [as_array(X) for X in ops]
    _check_cap(math.prod(a.shape[0] for a in arrays))
    out = arrays[0]
    for a in arrays[1:]:
        out = np.kron(out, a)
    if all(isinstance(X, HermitianOperator) for X in ops):
        return HermitianOperator(out, tuple(itertools.chain.from_iterable(X.dims for X in ops)))
    return out


def kron_power(X, n):
    arr = as_array(X)
    _check_cap(arr.shape[0] ** n)
    out = np.ones((1, 1), dtype=complex)
    for _ in range(n):
        out = np.kron(out, arr)
    return out


def _check_indices(idx, n):
    idx = sorted(set(int(i) for i in idx))
    if any(i < 0 or i >= n for i in idx):
        raise PreconditionError(f"subsystem indices {idx} out of range for {n} factors")
    return idx


def partial_trace(X, keep, dims=None):
    """Trace out every factor not listed in ``keep`` (positional order kept)."""
    dims = dims_of(X, dims)
    A = as_array(X)
    n = len(dims)
    keep = _check_indices(keep, n)
    T = A.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = [rows[i] if i not in keep else letters[n + i] for i in range(n)]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    R = np.einsum("".join(rows) + "".join(cols) + "->" + out, T)
    d = math.prod(dims[i] for i in keep)
    return R.reshape(d, d)


def partial_transpose(X, subsystems, dims=None):
    dims = dims_of(X, dims)
    A = as_array(X)
    n = len(dims)
    subs = _check_indices(subsystems, n)
    T = A.reshape(dims + dims)
    axes = list(range(2 * n))
    for i in subs:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    return T.transpose(axes).reshape(A.shape)


def permute_factors(X, perm, dims):
    """Conjugate X by the operator sending factor ``perm[i]`` to position i."""
    A = as_array(X)
    n = len(dims)
    T = A.reshape(tuple(dims) + tuple(dims))
    perm = list(perm)
    return T.transpose(perm + [n + p for p in perm]).reshape(A.shape)


def clusters(w, rel_tol):
    """Single-linkage groups of sorted eigenvalues; returns a label per value."""
    scale = max(np.abs(w).max(initial=0.0), 1e-300)
    labels = np.zeros(len(w), dtype=int)
    for i in range(1, len(w)):
        labels[i] = labels[i - 1] + (w[i] - w[i - 1] > rel_tol * scale)
    return labels


def spec_count(H, rel_tol=None):
    w = np.linalg.eigvalsh(hermitize(as_array(H)))
    rel_tol = tol.get("cluster") if rel_tol is None else rel_tol
    return int(clusters(w, rel_tol)[-1] + 1) if len(w) else 0


def pinch(X, sigma, rel_tol=None):
    """Project X onto the block diagonal of sigma's eigenspaces."""
    rel_tol = tol.get("cluster") if rel_tol is None else rel_tol
    w, U = eigh(sigma)
    labels = clusters(w, rel_tol)
    Y = U.conj().T @ as_array(X) @ U
    Y = np.where(labels[:, None] == labels[None, :], Y, 0)
    return U @ Y @ U.conj().T


def twirl(X, n, d):
    """Average of X over all permutations of its n factors of dimension d."""
    if n > tol.get("twirl_max_n"):
        raise ResourceLimitError(f"twirl enumerates n! permutations; n={n} is over the cap")
    A = as_array(X)
    if A.shape[0] != d ** n:
        raise PreconditionError(f"dimension {A.shape[0]} is not {d}^{n}")
    dims = (d,) * n
    acc = np.zeros_like(A)
    perms = list(itertools.permutations(range(n)))
    for p in perms:
        acc += permute_factors(A, p, dims)
    return acc / len(perms)


def sqrtm_psd(X):
    w, U = eigh(X)
    return from_eig(np.sqrt(np.clip(w, 0, None)), U)


def trace_norm(X):
    return float(np.abs(np.linalg.eigvalsh(hermitize(as_array(X)))).sum())


def fidelity_and_distances(rho, sigma):
    """Generalized fidelity, purified distance and trace distance."""
    r, s = as_array(rho), as_array(sigma)
    root = np.linalg.svd(sqrtm_psd(r) @ sqrtm_psd(s), compute_uv=False).sum()
    tr_r, tr_s = float(np.trace(r).real), float(np.trace(s).real)
    F = float(root + math.sqrt(max(0.0, (1 - tr_r) * (1 - tr_s))))
    F = min(F, 1.0)
    return {
        "F": F,
        "purified": math.sqrt(max(0.0, 1 - F * F)),
        "trace_dist": trace_norm(r - s) / 2,
    }


def support_projector(X):
    w, U = eigh(X)
    keep = w > floor_of(w)
    return U[:, keep] @ U[:, keep].conj().T


def support_basis(X):
    w, U = eigh(X)
    return U[:, w > floor_of(w)]


def supported_in(rho, sigma):
    """Whether supp(rho) lies inside supp(sigma) at the global floor."""
    w, U = eigh(sigma)
    null = U[:, w <= floor_of(w)]
    if null.shape[1] == 0:
        return True
    r = as_array(rho)
    leak = np.linalg.norm(null.conj().T @ r @ null, 2)
    return leak <= tol.get("support_floor") * max(1.0, np.linalg.norm(r, 2)) * 10
