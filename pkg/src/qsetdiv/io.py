"""JSON descriptors for operators, sets and set families.

Operators are ``{"dim", "factors", "re", "im"}`` objects (``"encoding": "hex"``
for bit-exact floats). General (non-Hermitian) matrices such as Kraus
operators use ``{"rows", "cols", "re", "im"}``. Errors name the offending
field with a JSON-pointer-like path.
"""

import json

import numpy as np

from .errors import PreconditionError
from .linalg import HermitianOperator, _parse_operator


def operator_to_json(X, dims=None, exact=False):
    return HermitianOperator(np.asarray(X), dims).to_json(exact)


def parse_operator(doc, where="$"):
    M, dims = _parse_operator(doc, where)
    try:
        return HermitianOperator(M, dims)
    except PreconditionError as exc:
        raise PreconditionError(f"{where}: {exc}") from None


def matrix_to_json(K):
    K = np.asarray(K, dtype=complex)
    return {"rows": K.shape[0], "cols": K.shape[1],
            "re": K.real.tolist(), "im": K.imag.tolist()}


def parse_matrix(doc, where="$"):
    if not isinstance(doc, dict) or "re" not in doc:
        raise PreconditionError(f"{where}.re: missing")
    try:
        re = np.array(doc["re"], dtype=float)
        im = np.array(doc.get("im", np.zeros_like(re)), dtype=float)
    except (TypeError, ValueError) as exc:
        raise PreconditionError(f"{where}.re: {exc}") from None
    if re.ndim != 2 or re.shape != im.shape:
        raise PreconditionError(f"{where}.im: shape does not match re")
    return re + 1j * im


def _field(doc, key, where):
    if key not in doc:
        raise PreconditionError(f"{where}.{key}: missing")
    return doc[key]


def _int_list(doc, key, where):
    v = _field(doc, key, where)
    if not isinstance(v, list) or not all(isinstance(x, int) and x >= 0 for x in v):
        raise PreconditionError(f"{where}.{key}: expected a list of nonnegative integers")
    return v


def parse_set(doc, where="$"):
    from . import sets

    if not isinstance(doc, dict):
        raise PreconditionError(f"{where}: expected an object")
    kind = _field(doc, "kind", where)
    if kind == "singleton":
        op = parse_operator(_field(doc, "state", where), f"{where}.state")
        S = sets.Singleton(op.matrix, op.dims)
    elif kind == "hull":
        gens = _field(doc, "generators", where)
        if not isinstance(gens, list) or not gens:
            raise PreconditionError(f"{where}.generators: expected a nonempty list")
        ops = [parse_operator(g, f"{where}.generators[{i}]") for i, g in enumerate(gens)]
        S = sets.Hull([o.matrix for o in ops], ops[0].dims)
    elif kind == "conditional":
        S = sets.Conditional(_int_list(doc, "factors", where), _int_list(doc, "identity_factors", where))
    elif kind == "channel_image":
        kraus = _field(doc, "kraus", where)
        if not isinstance(kraus, list) or not kraus:
            raise PreconditionError(f"{where}.kraus: expected a nonempty list")
        ks = [parse_matrix(K, f"{where}.kraus[{i}]") for i, K in enumerate(kraus)]
        S = sets.ChannelImage(ks, doc.get("factors"), doc.get("input_factors"))
    elif kind == "incoherent":
        S = sets.Incoherent(doc.get("factors") or [_field(doc, "dim", where)])
    elif kind == "rains":
        S = sets.Rains(_int_list(doc, "factors", where), _int_list(doc, "transposed_factors", where))
    elif kind == "mana":
        S = sets.Mana(int(_field(doc, "qudit_dim", where)), int(doc.get("copies", 1)))
    elif kind == "tensor_power":
        n = _field(doc, "n", where)
        if not isinstance(n, int) or n < 1:
            raise PreconditionError(f"{where}.n: expected a positive integer")
        S = sets.tensor_power(parse_set(_field(doc, "base", where), f"{where}.base"), n)
    else:
        raise PreconditionError(f"{where}.kind: unknown set kind {kind!r}")
    if "dim" in doc and doc["dim"] != S.dim:
        raise PreconditionError(f"{where}.dim: declared {doc['dim']} but the payload gives {S.dim}")
    return S


def parse_family(doc, where="$"):
    """A family descriptor is either ``{"family": "power", "base": <set>}``
    (tensor powers of a one-copy set) or ``{"family": "hull", "local_dim": d,
    "levels": {"1": [...], "2": [...]}}``. A bare set descriptor is read as
    the power family of that set."""
    from . import sets

    if not isinstance(doc, dict):
        raise PreconditionError(f"{where}: expected an object")
    fam = doc.get("family")
    if fam is None:
        return sets.KindFamily(parse_set(doc, where))
    if fam == "power":
        return sets.KindFamily(parse_set(_field(doc, "base", where), f"{where}.base"))
    if fam == "hull":
        levels = _field(doc, "levels", where)
        if not isinstance(levels, dict):
            raise PreconditionError(f"{where}.levels: expected an object keyed by n")
        parsed = {}
        for key, gens in levels.items():
            if not key.isdigit():
                raise PreconditionError(f"{where}.levels.{key}: keys must be positive integers")
            parsed[int(key)] = [parse_operator(g, f"{where}.levels.{key}[{i}]").matrix
                                for i, g in enumerate(gens)]
        return sets.HullFamily(parsed, int(_field(doc, "local_dim", where)))
    raise PreconditionError(f"{where}.family: unknown family {fam!r}")


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    except OSError as exc:
        raise PreconditionError(f"{path}: {exc.strerror}") from None
