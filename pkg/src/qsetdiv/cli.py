"""Command-line front end.

Exit codes: 0 success, 2 bad input (the message names the offending field),
3 solver non-convergence or heuristic output withheld (pass
``--allow-heuristic`` to print it anyway).
"""

import csv
import io
import json
import math
import sys

import click

from . import tolerances as tol
from .errors import (
    CompositionError,
    ConfigurationError,
    ConvergenceError,
    PreconditionError,
    ResourceLimitError,
    UndefinedRateError,
)
from .io import load_json, parse_family, parse_operator, parse_set

INPUT_ERRORS = (PreconditionError, ResourceLimitError, UndefinedRateError, ConfigurationError,
                CompositionError, KeyError, ValueError)


class HeuristicWithheld(Exception):
    pass


def num(x):
    """Finite floats rounded to 1e-10; infinities as the string "inf"."""
    try:
        v = float(x)
    except TypeError:
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return None
    return round(v, 10) + 0.0


class Ctx:
    def __init__(self, seed, out, allow_heuristic, fmt):
        self.seed = seed
        self.out = out
        self.allow_heuristic = allow_heuristic
        self.fmt = fmt

    def check(self, heuristic):
        if heuristic and not self.allow_heuristic:
            raise HeuristicWithheld("result is heuristic; rerun with --allow-heuristic to emit it")

    def check_converged(self, converged, residual):
        if not converged and not self.allow_heuristic:
            raise ConvergenceError(f"solver stopped before convergence (residual {residual:.3e});"
                                   " rerun with --allow-heuristic to emit the best value", residual)

    def emit(self, doc, rows=None, columns=None):
        if self.fmt == "csv" and rows is not None:
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow(["" if r[c] is None else r[c] for c in columns])
            text = buf.getvalue()
        else:
            text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        if self.out:
            with open(self.out, "w") as fh:
                fh.write(text)
        else:
            click.echo(text, nl=False)


def _parse_tols(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise PreconditionError(f"--tol {item!r}: expected name=value")
        name, value = item.split("=", 1)
        if name not in tol.DEFAULTS:
            raise PreconditionError(f"--tol {name}: unknown tolerance name")
        try:
            out[name] = float(value)
        except ValueError:
            raise PreconditionError(f"--tol {name}: {value!r} is not a number") from None
    return out


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Master seed for sampling.")
@click.option("--tol", "tols", multiple=True, metavar="NAME=VALUE", help="Override a tolerance.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write to a file.")
@click.option("--allow-heuristic", is_flag=True, help="Emit results flagged heuristic.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
              show_default=True)
@click.pass_context
def cli(ctx, seed, tols, out, allow_heuristic, fmt):
    """Divergences between sets of quantum states."""
    ctx.obj = Ctx(seed, out, allow_heuristic, fmt)
    ctx.with_resource(tol.overrides(**_parse_tols(tols)))


def _state(path):
    return parse_operator(load_json(path), f"{path}:$").matrix


def _set(path):
    return parse_set(load_json(path), f"{path}:$")


def _family(path):
    return parse_family(load_json(path), f"{path}:$")


PAIR_KINDS = ["umegaki", "petz", "sandwiched", "dmin", "dmax", "measured", "measured_alpha",
              "dhypo", "dmax_smoothed"]


@cli.command()
@click.option("--kind", type=click.Choice(PAIR_KINDS), required=True)
@click.option("--alpha", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.argument("rho_file")
@click.argument("sigma_file")
@click.pass_obj
def div(obj, kind, alpha, eps, rho_file, sigma_file):
    """Divergence between two states."""
    from . import divergences as dv
    from . import measured as ms

    rho, sigma = _state(rho_file), _state(sigma_file)
    need = {"petz": "alpha", "sandwiched": "alpha", "measured_alpha": "alpha",
            "dhypo": "eps", "dmax_smoothed": "eps"}.get(kind)
    if need == "alpha" and alpha is None:
        raise PreconditionError(f"--alpha is required for kind {kind}")
    if need == "eps" and eps is None:
        raise PreconditionError(f"--eps is required for kind {kind}")
    if kind == "umegaki":
        res = dv.umegaki(rho, sigma)
    elif kind == "petz":
        res = dv.petz(alpha, rho, sigma)
    elif kind == "sandwiched":
        res = dv.sandwiched(alpha, rho, sigma)
    elif kind == "dmin":
        res = dv.dmin(rho, sigma)
    elif kind == "dmax":
        res = dv.dmax(rho, sigma)
    elif kind == "measured":
        res = ms.dm(rho, sigma)
    elif kind == "measured_alpha":
        res = ms.dm_alpha(alpha, rho, sigma)
    elif kind == "dhypo":
        res = dv.beta_and_dhypo(eps, rho, sigma)
        obj.emit({"kind": kind, "eps": eps, "value": num(res.dh), "beta": num(res.beta)})
        return
    else:
        res = dv.dmax_smoothed(eps, rho, sigma)
    if kind.startswith("measured"):
        obj.check_converged(res.gradient_norm <= 10 * tol.get("gradient"), res.gradient_norm)
    else:
        obj.check_converged(res.converged, res.residual)
    obj.emit({"kind": kind, "alpha": alpha, "eps": eps, "value": num(res.value)})


SET_KINDS = ["umegaki", "petz", "sandwiched", "measured", "measured_alpha", "dmax", "dhypo"]


@cli.command()
@click.option("--kind", type=click.Choice(SET_KINDS), required=True)
@click.option("--alpha", type=float, default=None)
@click.option("--eps", type=float, default=None)
@click.argument("a_file")
@click.argument("b_file")
@click.pass_obj
def setdiv(obj, kind, alpha, eps, a_file, b_file):
    """Divergence between two sets of states."""
    from . import solvers as sv

    A, B = _set(a_file), _set(b_file)
    if kind in ("petz", "sandwiched", "measured_alpha") and alpha is None:
        raise PreconditionError(f"--alpha is required for kind {kind}")
    if kind == "dhypo" and eps is None:
        raise PreconditionError("--eps is required for kind dhypo")
    res = {
        "umegaki": lambda: sv.d_sets(A, B),
        "petz": lambda: sv.petz_sets(alpha, A, B),
        "sandwiched": lambda: sv.sandwiched_sets(alpha, A, B),
        "measured": lambda: sv.dm_sets(A, B),
        "measured_alpha": lambda: sv.dm_alpha_sets(alpha, A, B),
        "dmax": lambda: sv.dmax_sets(A, B, seed=obj.seed),
        "dhypo": lambda: sv.dhypo_sets(eps, A, B),
    }[kind]()
    obj.check(res.heuristic)
    obj.check_converged(not res.gap > tol.get("set_gap"), res.gap)
    obj.emit({"kind": kind, "alpha": alpha, "eps": eps, "value": num(res),
              "lower": num(res.lower), "upper": num(res.upper), "gap": num(res.gap),
              "heuristic": bool(res.heuristic)})


@cli.command()
@click.option("--m-max", type=int, required=True)
@click.argument("a_file")
@click.argument("b_file")
@click.pass_obj
def aep(obj, m_max, a_file, b_file):
    """Finite-m bounds on the regularized relative entropy."""
    from .aep import regularized_estimate

    est = regularized_estimate(_family(a_file), _family(b_file), m_max)
    rows = [{"m": r.m, "lower": num(r.lower), "upper": num(r.upper),
             "gap_guarantee": num(r.gap_guarantee), "heuristic": r.heuristic} for r in est.table]
    obj.check(any(r.heuristic for r in est.table))
    obj.emit({"best_lower": num(est.best_lower), "best_upper": num(est.best_upper),
              "lower_monotone": est.lower_monotone, "table": rows},
             rows, ["m", "lower", "upper", "gap_guarantee", "heuristic"])


@cli.command()
@click.option("--eps", type=float, required=True)
@click.option("--n-max", type=int, required=True)
@click.argument("a_file")
@click.argument("b_file")
@click.pass_obj
def stein(obj, eps, n_max, a_file, b_file):
    """Per-copy hypothesis-testing divergence with its one-shot envelope."""
    from .resource import stein_table

    table = stein_table(_family(a_file), _family(b_file), eps, n_max)
    rows = [{"n": r.n, "dh_per_n": num(r.dh_per_n), "floor": num(r.floor),
             "ceiling": num(r.ceiling)} for r in table]
    obj.emit({"eps": eps, "table": rows}, rows, ["n", "dh_per_n", "floor", "ceiling"])


@cli.command()
@click.option("--m-max", type=int, required=True)
@click.option("--free-b", "free_b", default=None, help="Free family on the target space.")
@click.argument("a_file")
@click.argument("b_file")
@click.argument("free_file")
@click.pass_obj
def rate(obj, m_max, free_b, a_file, b_file, free_file):
    """Interval for the conversion rate from A to B."""
    from .resource import rate_bounds

    rb = rate_bounds(_family(a_file), _family(b_file), _family(free_file), m_max,
                     _family(free_b) if free_b else None)
    obj.emit({k: [num(x) for x in v] for k, v in rb.to_json().items()})


@cli.command()
@click.option("--family", "family_kind", type=click.Choice(["incoherent", "conditional", "rains",
                                                            "mana"]), default=None)
@click.option("--d", type=int, default=2, show_default=True)
@click.option("--file", "family_file", default=None, help="Family descriptor instead of --family.")
@click.option("--m", type=int, required=True)
@click.option("--k", type=int, required=True)
@click.option("--samples", type=int, default=20, show_default=True)
@click.pass_obj
def validate(obj, family_kind, d, family_file, m, k, samples):
    """Sampled check of the family axioms."""
    from . import sets

    if family_file:
        fam = _family(family_file)
    elif family_kind == "incoherent":
        fam = sets.incoherent_family(d)
    elif family_kind == "conditional":
        fam = sets.conditional_family(d, d)
    elif family_kind == "rains":
        fam = sets.rains_family(d, d)
    elif family_kind == "mana":
        fam = sets.mana_family(d)
    else:
        raise PreconditionError("give --family or --file")
    rep = sets.validate_assumptions(fam, m, k, samples=samples, seed=obj.seed)
    obj.emit({"m": m, "k": k, "samples": samples, "violations": rep.violations,
              "max_ratio": num(rep.max_ratio), "passed": rep.passed})


@cli.command()
@click.option("--n", type=int, default=1, show_default=True)
@click.option("--m", type=int, default=1, show_default=True)
@click.option("--eps", type=float, required=True)
@click.option("--delta", type=float, default=0.0, show_default=True)
@click.option("--budget", type=int, default=8, show_default=True)
@click.argument("a_file")
@click.argument("free_file")
@click.argument("b_file")
@click.pass_obj
def protocol(obj, n, m, eps, delta, budget, a_file, free_file, b_file):
    """Build the measure-and-prepare map and audit it."""
    from .io import operator_to_json
    from .resource import build_rng_protocol, protocol_audit

    A, F, B = _family(a_file), _family(free_file), _family(b_file)
    P = build_rng_protocol(A, F, B, n, m, eps, delta, seed=obj.seed, budget=budget)
    rep = protocol_audit(P, A.at(n), B.at(m), F.at(n), F.at(m), budget, obj.seed)
    obj.check(rep.heuristic)
    obj.emit({"test": operator_to_json(P.M.M), "target": operator_to_json(P.target),
              "free_target": operator_to_json(P.free_target),
              "type1": num(P.M.type1), "type2": num(P.M.type2),
              "trans_error": num(rep.trans_error), "rng_violation": num(rep.rng_violation),
              "heuristic": rep.heuristic})


def run(argv=None):
    """Run the command line and return the exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cli.main(argv, prog_name="qsetdiv", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        return 1
    except (ConvergenceError, HeuristicWithheld) as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


def main():
    sys.exit(run())
