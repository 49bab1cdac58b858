"""Command-line front end.

    orbitlab k-eval INSTANCE [--grid-log2-min A --grid-log2-max B --grid-log2-steps N]
    orbitlab balance INSTANCE [--q Q]
    orbitlab cl-norm INSTANCE
    orbitlab means-norm INSTANCE
    orbitlab orbit-check INSTANCE
    orbitlab harness [--seed S --trials N]
    orbitlab verify-all [--seed S]

Results go to stdout or to ``--out``. Exit codes: 0 success, 1 validation
error, 2 solver failure, 3 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from .spaces import INF, Couple, DimensionError, DomainError, exponent, format_exponent

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_ACCEPTANCE = 0, 1, 2, 3
PHI_KINDS = ("power", "samples", "k_of_a")
DEFAULT_CONFIG = {"q": 2.0, "tol": 1e-8, "epsilon": 0.25, "truncation": 20, "seed": 0}


class ValidationError(ValueError):
    """Instance file violates the schema; names the offending field."""

    def __init__(self, field_name: str, constraint: str):
        super().__init__(f"{field_name}: {constraint}")
        self.field = field_name


# -- instance -----------------------------------------------------------------------

@dataclass(frozen=True)
class CoupleSpec:
    masses: tuple
    p0: object
    w0: tuple
    p1: object
    w1: tuple

    def build(self) -> Couple:
        return Couple.lebesgue(self.masses, self.p0, self.w0, self.p1, self.w1)


@dataclass(frozen=True)
class Instance:
    source: CoupleSpec
    a: tuple
    phi: dict
    config: dict
    target: Optional[CoupleSpec] = None
    b: Optional[tuple] = None

    def to_dict(self) -> dict:
        src = self.source
        out = {"source": {"masses": list(src.masses), "p0": format_exponent(src.p0), "U0": list(src.w0),
                          "p1": format_exponent(src.p1), "U1": list(src.w1)},
               "a": list(self.a), "phi": dict(self.phi), "config": dict(self.config)}
        if self.target is not None:
            t = self.target
            out["target"] = {"masses": list(t.masses), "q0": format_exponent(t.p0), "V0": list(t.w0),
                             "q1": format_exponent(t.p1), "V1": list(t.w1)}
        if self.b is not None:
            out["b"] = list(self.b)
        return out


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise ValidationError(where, "must be an object")
    if key not in obj:
        raise ValidationError(f"{where}.{key}" if where else key, "is required")
    return obj[key]


def _vector(value, name, positive=False, size=None):
    if not isinstance(value, list) or not value:
        raise ValidationError(name, "must be a nonempty list of numbers")
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(f"{name}[{i}]", "must be a finite number")
        if positive and v <= 0:
            raise ValidationError(f"{name}[{i}]", f"must be positive, got {v}")
        out.append(float(v))
    if size is not None and len(out) != size:
        raise ValidationError(name, f"must have {size} entries (one per atom), got {len(out)}")
    return tuple(out)


def _exp(value, name):
    if isinstance(value, bool):
        raise ValidationError(name, "must be a number >= 1 or \"inf\"")
    try:
        return exponent(value)
    except (DomainError, ValueError, TypeError, ZeroDivisionError):
        raise ValidationError(name, f"must be a number >= 1 or \"inf\", got {value!r}") from None


def _couple(spec, where, keys):
    pk0, wk0, pk1, wk1 = keys
    allowed = {"masses", pk0, wk0, pk1, wk1}
    if not isinstance(spec, dict):
        raise ValidationError(where, "must be an object")
    extra = sorted(set(spec) - allowed)
    if extra:
        raise ValidationError(f"{where}.{extra[0]}", f"unknown field (allowed: {', '.join(sorted(allowed))})")
    masses = _vector(_require(spec, "masses", where), f"{where}.masses", positive=True)
    n = len(masses)
    p0 = _exp(_require(spec, pk0, where), f"{where}.{pk0}")
    w0 = _vector(_require(spec, wk0, where), wk0, positive=True, size=n)
    p1 = _exp(_require(spec, pk1, where), f"{where}.{pk1}")
    w1 = _vector(_require(spec, wk1, where), wk1, positive=True, size=n)
    return CoupleSpec(masses, p0, w0, p1, w1)


def _phi_spec(spec) -> dict:
    if not isinstance(spec, dict):
        raise ValidationError("phi", "must be an object")
    kind = spec.get("kind")
    if kind not in PHI_KINDS:
        raise ValidationError("phi.kind", f"unknown kind {kind!r}; allowed kinds: {', '.join(PHI_KINDS)}")
    if kind == "power":
        theta = _require(spec, "theta", "phi")
        try:
            th = Fraction(theta) if not isinstance(theta, float) else Fraction(theta).limit_denominator(10 ** 12)
        except (ValueError, TypeError):
            raise ValidationError("phi.theta", f"must be a number in [0, 1], got {theta!r}") from None
        if isinstance(theta, bool) or not 0 <= th <= 1:
            raise ValidationError("phi.theta", f"must be a number in [0, 1], got {theta!r}")
        return {"kind": "power", "theta": theta if isinstance(theta, (int, float)) else str(th)}
    if kind == "samples":
        t = _vector(_require(spec, "t", "phi"), "phi.t", positive=True)
        v = _vector(_require(spec, "v", "phi"), "phi.v", positive=True, size=len(t))
        if len(t) < 2:
            raise ValidationError("phi.t", "needs at least two samples")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValidationError("phi.t", "must be strictly increasing")
        return {"kind": "samples", "t": list(t), "v": list(v)}
    return {"kind": "k_of_a"}


def _config(spec) -> dict:
    spec = {} if spec is None else spec
    if not isinstance(spec, dict):
        raise ValidationError("config", "must be an object")
    extra = sorted(set(spec) - set(DEFAULT_CONFIG))
    if extra:
        raise ValidationError(f"config.{extra[0]}", f"unknown field (allowed: {', '.join(sorted(DEFAULT_CONFIG))})")
    cfg = dict(DEFAULT_CONFIG)
    cfg.update(spec)
    checks = {"q": lambda v: v > 1, "tol": lambda v: v > 0, "epsilon": lambda v: 0 < v <= 0.5,
              "truncation": lambda v: v >= 0, "seed": lambda v: v >= 0}
    rules = {"q": "a number > 1", "tol": "a number > 0", "epsilon": "a number in (0, 1/2]",
             "truncation": "an integer >= 0", "seed": "an integer >= 0"}
    for key, ok in checks.items():
        v = cfg[key]
        integral = key in ("truncation", "seed")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or (integral and not isinstance(v, int)) \
                or not math.isfinite(v) or not ok(v):
            raise ValidationError(f"config.{key}", f"must be {rules[key]}, got {v!r}")
        cfg[key] = int(v) if integral else float(v)
    return cfg


def parse_instance(data) -> Instance:
    if not isinstance(data, dict):
        raise ValidationError("instance", "must be a JSON object")
    allowed = {"source", "target", "a", "b", "phi", "config"}
    extra = sorted(set(data) - allowed)
    if extra:
        raise ValidationError(extra[0], f"unknown field (allowed: {', '.join(sorted(allowed))})")
    source = _couple(_require(data, "source", ""), "source", ("p0", "U0", "p1", "U1"))
    n = len(source.masses)
    a = _vector(_require(data, "a", ""), "a", size=n)
    phi = _phi_spec(_require(data, "phi", ""))
    target = b = None
    if "target" in data:
        target = _couple(data["target"], "target", ("q0", "V0", "q1", "V1"))
    if "b" in data:
        if target is None:
            raise ValidationError("b", "requires a target couple")
        b = _vector(data["b"], "b", size=len(target.masses))
    return Instance(source, a, phi, _config(data.get("config")), target, b)


def load_instance(path) -> Instance:
    """Read and validate a JSON instance file; defaults are filled in."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError("path", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError("instance", f"invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_instance(data)


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(dumps(instance.to_dict()) + "\n", encoding="utf-8")


def build_phi(instance: Instance):
    from .phifn import InterpFunction, concave_majorant

    spec = instance.phi
    if spec["kind"] == "power":
        theta = spec["theta"]
        return InterpFunction.power(Fraction(theta) if isinstance(theta, str) else theta)
    if spec["kind"] == "samples":
        return concave_majorant(np.column_stack([spec["t"], spec["v"]]))
    return InterpFunction.k_derived(instance.source.build(), np.array(instance.a))


# -- deterministic serialization ----------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj) -> str:
    """JSON with sorted keys and floats at 17 significant digits."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, Fraction):
        return json.dumps(format_exponent(obj)) if obj >= 1 else json.dumps(str(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(f"{json.dumps(k)}:{dumps(v)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# -- commands -----------------------------------------------------------------------

def cmd_k_eval(instance, args):
    from .kfunc import KFunctional

    if args.grid_log2_steps < 1 or args.grid_log2_max < args.grid_log2_min:
        raise ValidationError("--grid-log2-*", "need steps >= 1 and max >= min")
    t = 2.0 ** np.linspace(args.grid_log2_min, args.grid_log2_max, args.grid_log2_steps)
    kf = KFunctional(instance.source.build(), np.array(instance.a))
    vals = np.atleast_1d(kf(np.ones_like(t), t))
    return _csv(["s", "t", "K"], [(1.0, float(ti), float(v)) for ti, v in zip(t, vals)])


def cmd_balance(instance, args):
    from .phifn import balanced_sequence

    q = instance.config["q"] if args.q is None else args.q
    if not q > 1:
        raise ValidationError("--q", f"must exceed 1, got {q}")
    seq = balanced_sequence(build_phi(instance), q)
    return _csv(["n", "t", "rho"], [(int(n), float(t), float(r))
                                   for n, t, r in zip(seq.indices, seq.t_values, seq.rho_values)])


def _cl_dict(cl):
    return {"value": cl.value, "witness0": cl.witness0, "witness1": cl.witness1,
            "residual": cl.residual, "method": cl.method}


def cmd_cl_norm(instance, args):
    from .clnorm import cl_norm

    tol = max(instance.config["tol"], 1e-12)
    cl = cl_norm(build_phi(instance), instance.source.build(), np.array(instance.a), tol)
    return dumps(_cl_dict(cl)) + "\n"


def cmd_means_norm(instance, args):
    from .means import means_norm

    src = instance.source
    cfg = instance.config
    res = means_norm(build_phi(instance), src.build(), src.p0, src.p1, np.array(instance.a),
                     q=cfg["q"], tol=max(cfg["tol"], 1e-12))
    out = {"value": res.value, "path": res.path, "degenerate_case": res.degenerate_case,
           "components": res.components, "p0": src.p0, "p1": src.p1}
    if res.balanced_u is not None:
        out["balanced_u"] = {"t": res.balanced_u.t_values, "indices": res.balanced_u.indices,
                             "side": res.balanced_u.side}
        out["k_seq"] = res.k_seq
    if res.cl is not None:
        out["cl"] = _cl_dict(res.cl)
    return dumps(out) + "\n"


def cmd_orbit_check(instance, args):
    from .orbit import OrbitProblem, orbit_norm

    if instance.target is None:
        raise ValidationError("target", "orbit-check needs a target couple")
    if instance.b is None:
        raise ValidationError("b", "orbit-check needs the target element b")
    problem = OrbitProblem(instance.source.build(), instance.target.build(),
                           np.array(instance.a), np.array(instance.b))
    rep = orbit_norm(problem, q=instance.config["q"], tol=max(instance.config["tol"], 1e-12))
    out = {"r0": format_exponent(rep.r0), "r1": format_exponent(rep.r1), "status": rep.status,
           "orbit_norm_value": rep.orbit_norm_value, "diagnostics": rep.diagnostics}
    if rep.u is not None:
        out["u"] = {"t": rep.u.t_values, "indices": rep.u.indices, "side": rep.u.side}
    if rep.k_seq is not None:
        out["psi_b"] = rep.k_seq
    if rep.cl is not None:
        out["cl"] = _cl_dict(rep.cl)
    return dumps(out) + "\n"


def cmd_harness(instance, args):
    from .orbit import harness_prop1

    rep = harness_prop1(args.seed, args.trials)
    return "".join(dumps(line) + "\n" for line in rep.lines)


def cmd_verify_all(instance, args, stream):
    from .acceptance import run_suite

    results = run_suite(args.seed)
    for r in results:
        print(r.line(), file=stream)
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed", file=stream)
    out = Path(args.out or "artifacts")
    out.mkdir(parents=True, exist_ok=True)
    harness = next((r for r in results if r.number == 7), None)
    summary = []
    for r in results:
        art = r.artifact()
        if r.number == 7:
            art["details"] = {k: v for k, v in art["details"].items() if k != "trials"}
        summary.append(art)
    (out / "acceptance.json").write_text(dumps({"seed": args.seed, "criteria": summary}) + "\n",
                                         encoding="utf-8")
    if harness is not None:
        lines = harness.details["trials"]
        (out / "harness.jsonl").write_text("".join(dumps(ln) + "\n" for ln in lines), encoding="utf-8")
    return ok


COMMANDS = {"k-eval": cmd_k_eval, "balance": cmd_balance, "cl-norm": cmd_cl_norm,
            "means-norm": cmd_means_norm, "orbit-check": cmd_orbit_check, "harness": cmd_harness}
NEEDS_INSTANCE = {"k-eval", "balance", "cl-norm", "means-norm", "orbit-check"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbitlab", description="Real-interpolation numerics on finite couples.")
    parser.add_argument("command", choices=sorted(COMMANDS) + ["verify-all"])
    parser.add_argument("instance", nargs="?", help="JSON instance file")
    parser.add_argument("--grid-log2-min", type=float, default=-10.0)
    parser.add_argument("--grid-log2-max", type=float, default=10.0)
    parser.add_argument("--grid-log2-steps", type=int, default=21)
    parser.add_argument("--q", type=float, default=None, help="balancing ratio (default from instance)")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--out", default=None, help="output file (a directory for verify-all)")
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    from .clnorm import MembershipError
    from .kfunc import SolverError
    from .orbit import ConstructionError, PreconditionError
    from .phifn import ClassificationError, InvariantError

    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        instance = None
        if args.command in NEEDS_INSTANCE:
            if args.instance is None:
                raise ValidationError("instance", f"{args.command} needs an instance file")
            instance = load_instance(args.instance)
        elif args.instance is not None:
            instance = load_instance(args.instance)
        if args.seed is None:
            args.seed = instance.config["seed"] if instance is not None else 0
        if args.trials < 0:
            raise ValidationError("--trials", "must be >= 0")
        if args.command == "verify-all":
            return EXIT_OK if cmd_verify_all(instance, args, stdout) else EXIT_ACCEPTANCE
        text = COMMANDS[args.command](instance, args)
    except (ValidationError, DomainError, DimensionError, PreconditionError) as exc:
        print(f"validation error: {exc}", file=stderr)
        return EXIT_VALIDATION
    except (SolverError, MembershipError, ClassificationError, InvariantError,
            ConstructionError, ArithmeticError) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_SOLVER
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
