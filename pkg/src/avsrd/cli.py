"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 infeasible distortion level,
4 budget exceeded. Errors are printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Optional

import numpy as np

from . import approx, continuity as cont, models, sim
from .avs import ModelError, StateModel, SubsourceEnsemble, build_set, decompose_into_rules, load_model
from .estimator import EstimationExperiment, validate_bound
from .helpful import build_meta_source, helpful_full_lookahead_rd, helpful_one_step_bounds
from .lp import LpError
from .prob import LN2, DistortionMatrix, InvalidDistribution, binary_entropy
from .rd import InfeasibleDistortion

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4

CLI_TOL = 1e-6
DEFAULT_EPS_BITS = 0.02


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def fmt(v) -> str:
    """12 significant digits; infinities as ``inf``."""
    if v is None:
        return ""
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


# -- argument helpers ---------------------------------------------------------------


def _scale(units: str) -> float:
    return 1.0 / LN2 if units == "bits" else 1.0


def _load(args):
    if args.model and args.builtin:
        raise CliError(EXIT_CONFIG, "config", "give either --model or --builtin, not both")
    if args.model:
        return load_model(args.model)
    if args.builtin:
        return models.builtin(args.builtin)
    raise CliError(EXIT_CONFIG, "config", "a model is required (--model FILE or --builtin NAME)")


def _distortion(spec: str, n: int) -> DistortionMatrix:
    if spec == "hamming":
        return DistortionMatrix.hamming(n)
    try:
        if spec.lstrip().startswith("["):
            table = json.loads(spec)
        else:
            with open(spec) as fh:
                table = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_CONFIG, "config", f"cannot read distortion table: {exc}") from None
    d = DistortionMatrix(np.asarray(table, dtype=np.float64))
    if d.n_src != n:
        raise CliError(EXIT_CONFIG, "config", "distortion rows must match the alphabet size")
    return d


def _d_values(args) -> list:
    if args.D is not None and args.D_range is not None:
        raise CliError(EXIT_CONFIG, "config", "give either --D or --D-range")
    if args.D is not None:
        return [float(x) for x in args.D]
    if args.D_range is not None:
        start, stop, step = args.D_range
        if step <= 0:
            raise CliError(EXIT_CONFIG, "config", "--D-range step must be positive")
        k = math.floor((stop - start) / step + 1e-9)
        return [start + i * step for i in range(k + 1)] if k >= 0 else []
    raise CliError(EXIT_CONFIG, "config", "distortion levels are required (--D or --D-range)")


def _grid_spec(args, d) -> approx.GridSpec:
    if args.eps is not None and args.gamma is not None:
        raise CliError(EXIT_CONFIG, "config", "choose one accuracy mode: --eps or --gamma")
    kw = dict(max_points=args.max_points, solver_tol=args.tol)
    if args.gamma is not None:
        return approx.GridSpec.budget(args.gamma, **kw)
    eps = DEFAULT_EPS_BITS * LN2 if args.eps is None else args.eps / _scale(args.units)
    return approx.GridSpec.certified(eps, d, **kw)


def _out(args):
    return open(args.output, "w", newline="") if args.output else sys.stdout


def _write_csv(args, header, rows, meta: dict):
    fh = _out(args)
    try:
        fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _write_json(args, obj):
    text = json.dumps(obj, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def read_csv(path_or_text: str):
    """Parse a CSV written by this tool: ``(meta, header, rows as floats)``."""
    lines = path_or_text.splitlines() if "\n" in path_or_text else open(path_or_text).read().splitlines()
    meta = {}
    if lines and lines[0].startswith("#"):
        for tok in lines[0][1:].split():
            k, _, v = tok.partition("=")
            meta[k] = v
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader)
    rows = [[float(v) if v != "" else None for v in r] for r in reader]
    return meta, header, rows


# -- commands -----------------------------------------------------------------------


def cmd_rd(args) -> int:
    model = _load(args)
    n = model.n
    d = _distortion(args.distortion, n)
    Ds = _d_values(args)
    s = _scale(args.units)
    meta = {"command": "rd", "regime": args.regime, "units": args.units, "seed": args.seed}

    if args.regime == "helpful-full":
        if not isinstance(model, SubsourceEnsemble):
            raise CliError(EXIT_CONFIG, "config", "helpful-full needs a subsource model")
        ms = build_meta_source(model, d)
        rows = []
        for D in Ds:
            R = helpful_full_lookahead_rd(ms, D, args.tol)
            rows.append([D, R * s, args.tol * s] + list(ms.beta))
        header = ["D", "R", "eps_certified"] + [f"beta_{i}" for i in range(len(ms.beta))]
        _write_csv(args, header, rows, meta)
        return 0

    spec = _grid_spec(args, d)
    if args.regime == "helpful-one-step":
        if not isinstance(model, SubsourceEnsemble):
            raise CliError(EXIT_CONFIG, "config", "helpful-one-step needs a subsource model")
        rows = []
        for D in Ds:
            b = helpful_one_step_bounds(model, d, D, spec)
            if math.isinf(b.upper):
                raise InfeasibleDistortion(f"D={D!r} is infeasible for every attainable law")
            eps, _ = spec.accuracy(d)
            rows.append([D, b.lower * s, b.upper * s, eps * s] + list(b.upper_detail.arg))
        header = ["D", "R_lower", "R_upper", "eps_certified"] + [f"arg_{i}" for i in range(n)]
        _write_csv(args, header, rows, meta)
        return 0

    curve = approx.rd_curve(model, args.regime, d, Ds, spec, sense=args.sense)
    rows = []
    for r in curve.results:
        if r.infinite:
            raise InfeasibleDistortion(f"D={r.D!r} is below D_min for some attainable law")
        eps = r.certified_eps
        rows.append([r.D, r.value * s, None if eps is None else eps * s] + list(r.arg))
    meta["mode"] = spec.mode
    header = ["D", "R", "eps_certified"] + [f"arg_{i}" for i in range(n)]
    _write_csv(args, header, rows, meta)
    return 0


def _hb(x: float) -> float:
    return binary_entropy(min(max(x, 0.0), 1.0), bits=True)


def _closed_binary(p1: float, D: float) -> float:
    p1 = min(p1, 1.0 - p1)
    return max(_hb(p1) - _hb(D), 0.0) if D < p1 else 0.0


def cmd_examples(args) -> int:
    s = _scale(args.units)
    d = DistortionMatrix.hamming(2)
    spec = _grid_spec(args, d)
    meta = {"command": "examples", "figure": args.figure, "units": args.units, "seed": args.seed}
    to_units = LN2 * s  # closed forms below are in bits
    if args.figure == "fig7":
        Ds = _d_values(args) if (args.D or args.D_range) else list(np.round(np.arange(0.05, 0.5, 0.05), 10))
        ens = models.two_bernoulli()
        cheat = approx.rd_curve(ens, "cheating", d, Ds, spec)
        causal = approx.rd_curve(ens, "strictly_causal", d, Ds, spec)
        rows = []
        for a, b in zip(cheat.results, causal.results):
            rows.append([a.D, a.value * s, b.value * s,
                         _closed_binary(0.5, a.D) * to_units, _closed_binary(1 / 3, a.D) * to_units])
        header = ["D", "R_cheating", "R_strictly_causal", "closed_cheating", "closed_strictly_causal"]
    elif args.figure == "fig9":
        Ds = _d_values(args) if (args.D or args.D_range) else [0.25]
        deltas = args.deltas if args.deltas else list(np.round(np.arange(0.0, 0.501, 0.05), 10))
        rows = []
        for delta in deltas:
            fset = build_set(models.noisy_second(delta), "states")
            grid = approx.GridFilter.build(fset, spec)
            for D in Ds:
                r = approx.approx_extremum(fset, d, D, spec, grid=grid)
                closed = _closed_binary(models.noisy_second_closed_form(delta), D)
                rows.append([delta, D, r.value * s, closed * to_units])
        header = ["delta", "D", "R", "closed_form"]
    elif args.figure == "fig10":
        Ds = _d_values(args) if (args.D or args.D_range) else list(np.round(np.arange(0.02, 0.25, 0.02), 10))
        ens = models.fair_coins()
        ms = build_meta_source(ens, d)
        cheat_set = build_set(ens, "cheating")
        grid = approx.GridFilter.build(cheat_set, spec)
        rows = []
        for D in Ds:
            lower = helpful_full_lookahead_rd(ms, D, args.tol)
            upper = approx.approx_extremum(cheat_set, d, D, spec, "min", grid).value
            adversarial = approx.approx_extremum(cheat_set, d, D, spec, "max", grid).value
            closed_lower = 0.5 * (1 - _hb(2 * D)) if D < 0.25 else 0.0
            rows.append([D, lower * s, upper * s, adversarial * s,
                         closed_lower * to_units, _closed_binary(0.25, D) * to_units])
        header = ["D", "R_full_lookahead", "R_one_step_upper", "R_adversarial",
                  "closed_full_lookahead", "closed_one_step_upper"]
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(EXIT_CONFIG, "config", f"unknown figure {args.figure!r}")
    _write_csv(args, header, rows, meta)
    return 0


def _strategy(args, model):
    n = model.n
    kind = args.strategy
    if kind == "max-rule":
        order = args.order if args.order is not None else list(range(n))
        return sim.max_rule(n, order)
    if kind == "rules":
        if args.target is None:
            raise CliError(EXIT_CONFIG, "config", "--strategy rules needs --target")
        ens = model if isinstance(model, SubsourceEnsemble) else model.source
        if ens is None:
            raise CliError(EXIT_CONFIG, "config", "rule strategies need a subsource model")
        return sim.OneStepRules(decompose_into_rules(args.target, ens))
    if kind == "mixing":
        w = args.weights if args.weights is not None else [1.0 / model.m] * model.m
        return sim.StrictlyCausal(w)
    if kind == "state":
        if not isinstance(model, StateModel):
            raise CliError(EXIT_CONFIG, "config", "--strategy state needs a state model")
        if args.weights is None:
            raise CliError(EXIT_CONFIG, "config", "--strategy state needs --weights (row-major |T| x m)")
        return sim.StateRules(np.reshape(args.weights, (model.n_states, model.m)))
    raise CliError(EXIT_CONFIG, "config", f"unknown strategy {kind!r}")  # pragma: no cover


def cmd_simulate(args) -> int:
    model = _load(args)
    d = _distortion(args.distortion, model.n)
    strat = _strategy(args, model)
    rep = sim.run_experiment(model, strat, d, args.n, args.replicas, args.delta, args.seed, target=args.target)
    out = rep.to_dict()
    if not args.keep_types:
        out.pop("types")
    out["strategy"] = args.strategy
    _write_json(args, out)
    return 0


def cmd_estimate(args) -> int:
    p = np.asarray(args.p, dtype=np.float64)
    d = _distortion(args.distortion, p.size)
    eps = args.eps / _scale(args.units)
    exp = EstimationExperiment(p, d, args.D, eps, args.tau, args.n_values or [], args.replicas, args.seed)
    rep = validate_bound(exp)
    fh = _out(args)
    try:
        fh.write(f"# command=estimate seed={args.seed} certified_n={rep.certified_n} holds={rep.holds}\n")
        fh.write(rep.to_csv())
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_bounds(args) -> int:
    d = _distortion(args.distortion, args.alphabet_size)
    ctx = cont.ContinuityContext.from_distortion(d)
    s = _scale(args.units)
    eps = args.eps / s
    out = {"command": "bounds", "units": args.units, "seed": args.seed, "eps": args.eps}
    out["max_certifiable_eps"] = cont.max_certifiable_eps(ctx) * s
    gamma = cont.certified_gamma(eps, ctx)
    out["certified_gamma"] = gamma
    out["grid_points"] = approx.grid_size(d.n_src, gamma)
    out["grid_count_bound"] = cont.grid_count_bound(eps, ctx)
    if ctx.zero_in_every_row and eps < math.log(d.n_src):
        out["sufficient_sample_size"] = cont.sufficient_sample_size(eps, args.tau, ctx)
        out["tau"] = args.tau
    if args.l1 is not None:
        if ctx.zero_in_every_row:
            out["lemma2_bound"] = cont.lemma2_bound(args.l1, ctx) * s
        out["lemma3_bound"] = cont.lemma3_bound(args.l1, ctx) * s
    out = {k: (fmt(v) if isinstance(v, float) and math.isinf(v) else v) for k, v in out.items()}
    _write_json(args, out)
    return 0


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="avsrd", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--units", choices=("bits", "nats"), default="bits")
        sp.add_argument("--output", "-o")
        if model:
            sp.add_argument("--model", help="model JSON file")
            sp.add_argument("--builtin", help="built-in model name")
            sp.add_argument("--distortion", default="hamming", help="'hamming', inline JSON table, or file")

    def accuracy(sp):
        sp.add_argument("--eps", type=float, help="certified accuracy (in --units)")
        sp.add_argument("--gamma", type=float, help="lattice step (budget mode)")
        sp.add_argument("--max-points", type=int, default=approx.DEFAULT_MAX_POINTS)
        sp.add_argument("--tol", type=float, default=CLI_TOL, help="solver tolerance in nats")

    def levels(sp):
        sp.add_argument("--D", nargs="*", type=float)
        sp.add_argument("--D-range", nargs=3, type=float, metavar=("START", "STOP", "STEP"))

    rd = sub.add_parser("rd", help="rate-distortion curve of a switcher model")
    common(rd)
    accuracy(rd)
    levels(rd)
    rd.add_argument(
        "--regime",
        required=True,
        choices=("compound", "strictly_causal", "cheating", "states", "helpful-full", "helpful-one-step"),
    )
    rd.add_argument("--sense", choices=("max", "min"), default="max")
    rd.set_defaults(func=cmd_rd)

    ex = sub.add_parser("examples", help="data series of the worked examples")
    common(ex, model=False)
    accuracy(ex)
    levels(ex)
    ex.add_argument("figure", choices=("fig7", "fig9", "fig10"))
    ex.add_argument("--deltas", nargs="*", type=float)
    ex.set_defaults(func=cmd_examples)

    si = sub.add_parser("simulate", help="Monte-Carlo run of a switcher strategy")
    common(si)
    si.add_argument("--strategy", choices=("max-rule", "rules", "mixing", "state"), required=True)
    si.add_argument("--order", nargs="*", type=int)
    si.add_argument("--target", nargs="*", type=float)
    si.add_argument("--weights", nargs="*", type=float)
    si.add_argument("--n", type=int, default=1000)
    si.add_argument("--replicas", type=int, default=100)
    si.add_argument("--delta", type=float, default=0.05)
    si.add_argument("--keep-types", action="store_true")
    si.set_defaults(func=cmd_simulate)

    es = sub.add_parser("estimate", help="plug-in estimator deviation experiment")
    common(es, model=False)
    es.add_argument("--distortion", default="hamming")
    es.add_argument("--p", nargs="+", type=float, required=True)
    es.add_argument("--D", type=float, required=True)
    es.add_argument("--eps", type=float, required=True, help="accuracy (in --units)")
    es.add_argument("--tau", type=float, required=True)
    es.add_argument("--n-values", nargs="*", type=int)
    es.add_argument("--replicas", type=int, default=1000)
    es.set_defaults(func=cmd_estimate)

    bo = sub.add_parser("bounds", help="continuity-bound calculators")
    common(bo, model=False)
    bo.add_argument("--distortion", default="hamming")
    bo.add_argument("--alphabet-size", type=int, default=2)
    bo.add_argument("--eps", type=float, required=True, help="accuracy (in --units)")
    bo.add_argument("--tau", type=float, default=0.1)
    bo.add_argument("--l1", type=float)
    bo.set_defaults(func=cmd_bounds)
    return p


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        if exc.code in (0, None):
            return 0
        return _fail(EXIT_CONFIG, "config", "invalid command line")
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(exc.code, exc.kind, str(exc))
    except InfeasibleDistortion as exc:
        return _fail(EXIT_INFEASIBLE, "infeasible", str(exc))
    except (approx.BudgetExceeded, sim.BudgetExceeded) as exc:
        return _fail(EXIT_BUDGET, "budget", str(exc))
    except (ModelError, InvalidDistribution, cont.OutOfRegime, cont.DegenerateDistortion,
            ValueError, LpError, OSError) as exc:
        return _fail(EXIT_CONFIG, "config", str(exc))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
