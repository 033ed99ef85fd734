"""Command-line interface.

Subcommands: simulate | marginal | pairs | screen | resuscitate | fdr | report

Exit codes: 0 success, 2 usage error, 3 data error, 4 infeasible config.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from .dataset import DataError, DiscretizationSpec, load_csv, normalize_response, write_csv
from .elimination import eliminate, stopping_rule
from .marginal import (MARGINAL_METHODS, default_n_r, marginal_ranking, pair_scan,
                       rank_i2_first_appearance, rank_i2f)
from .permfdr import (NoThreshold, fdr_curve, rank_coverage_curve, run_permutation_study,
                      select_variables, threshold_at)
from .ranking import RankingTable, read_ranking_tsv
from .screening import (DEFAULT_M, DEFAULT_NS, InfeasibleConfig, ScreeningConfig,
                        draw_subsets, rank_by_retention, resuscitate, screen)
from .simgen import ExampleSpec, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 2, 3, 4

TSV_COLUMNS = """\
column orders (tab-separated, one header row, '#' lines are comments):
  marginal     variable, <method>_score, <method>_rank ... (dataset order)
  pairs        var_a, var_b, I            then  variable, i2_rank, i2f_count, i2f_rank
  screen       variable, sampled, retained, rate, rank
  resuscitate  variable, initial_rank, ud1_rank, ud2_rank, ...   then one screen table per stage
  fdr          threshold, M1, p0_median, fdr, fdr_capped
  report       retained, qualified_fraction
discretization: a value equal to a cutoff goes to the upper bin."""


class UsageError(Exception):
    pass


# execution-only settings; kept out of report headers so reports do not
# depend on them
_NOT_IN_HEADER = {"workers", "out", "format", "config", "json_errors", "selection",
                  "trace_out", "func", "command", "stochastic"}


def _add_data_args(p):
    g = p.add_argument_group("data source (exactly one)")
    g.add_argument("--in", dest="input", help="CSV file with a header row")
    g.add_argument("--example", type=int, choices=range(1, 6), help="generate example 1..5")
    p.add_argument("--response", default="Y", help="name of the response column (default Y)")
    p.add_argument("--n", type=int, help="sample size for --example")
    p.add_argument("--mu0", type=float, help="signal strength for example 5")
    p.add_argument("--data-seed", type=int, help="seed for --example (default: --seed)")
    p.add_argument("--discretize", help="cutoffs, e.g. 'age:30,50;bmi:25'")
    p.add_argument("--y-model", choices=("random_y", "specified_y"), default="random_y")
    p.add_argument("--no-normalize", action="store_true",
                   help="use the raw response (default: center and scale)")


def _add_common(p, stochastic: bool):
    p.add_argument("--seed", type=int, required=False,
                   help="RNG seed" + (" (mandatory)" if stochastic else ""))
    p.add_argument("--workers", type=int, default=None,
                   help="thread count (results do not depend on it)")
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.add_argument("--config", help="key=value file mirroring the flags (flags win)")
    p.add_argument("--json-errors", action="store_true",
                   help="emit machine-readable error JSON on standard error")


def _add_screen_args(p):
    p.add_argument("--m", type=int, default=DEFAULT_M, help="subset size")
    p.add_argument("--ns", type=int, default=DEFAULT_NS, help="number of subsets")
    p.add_argument("--rule", default="all_d_positive",
                   choices=("all_d_positive", "d_exceeds", "d_exceeds_schedule"))
    p.add_argument("--rule-params", help="threshold(s), comma-separated")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partret", description="Partition Retention screening",
        epilog=TSV_COLUMNS, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic example as CSV")
    p.add_argument("--example", type=int, choices=range(1, 6))
    p.add_argument("--n", type=int)
    p.add_argument("--mu0", type=float)
    _add_common(p, stochastic=True)
    p.set_defaults(func=cmd_simulate, stochastic=True)

    p = sub.add_parser("marginal", help="rank variables by |t|, I1 or chi-square",
                       epilog=TSV_COLUMNS, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_data_args(p)
    _add_common(p, stochastic=False)
    p.add_argument("--methods", default="i1", help="comma-separated subset of t,i1,chi2")
    p.set_defaults(func=cmd_marginal, stochastic=False)

    p = sub.add_parser("pairs", help="exhaustive pair scan with I2 and I2f rankings")
    _add_data_args(p)
    _add_common(p, stochastic=False)
    p.add_argument("--top", type=int, default=100, help="number of pairs to list")
    p.add_argument("--n-r", type=int, help="top pairs counted by I2f (default 1%% of pairs)")
    p.set_defaults(func=cmd_pairs, stochastic=False)

    p = sub.add_parser("screen", help="random-subset retention screening")
    _add_data_args(p)
    _add_common(p, stochastic=True)
    _add_screen_args(p)
    p.add_argument("--strata-list", help="comma-separated variable names of the in-list stratum")
    p.add_argument("--k-in", type=int, default=0, help="members drawn from --strata-list")
    p.add_argument("--rank-mode", choices=("raw_count", "rate"), default="raw_count")
    p.add_argument("--trace", type=int, default=0, help="dump traces of the first K subsets")
    p.add_argument("--trace-out", help="path for --trace JSON (default: <out>.trace.json)")
    p.set_defaults(func=cmd_screen, stochastic=True)

    p = sub.add_parser("resuscitate", help="stratified re-screening stages (ud1, ud2, ...)")
    _add_data_args(p)
    _add_common(p, stochastic=True)
    _add_screen_args(p)
    p.add_argument("--initial-method", default="i1",
                   choices=("t", "i1", "chi2", "i2", "i2f", "retention"))
    p.add_argument("--initial-ranking", help="ranking TSV (variable, score, rank)")
    p.add_argument("--stages", default="10:3:100000,15:3:100000",
                   help="comma-separated L:k_in:n_s stage plan")
    p.set_defaults(func=cmd_resuscitate, stochastic=True)

    p = sub.add_parser("fdr", help="permutation FDR for retained-subset stopping I")
    _add_data_args(p)
    _add_common(p, stochastic=True)
    _add_screen_args(p)
    p.add_argument("--permutations", type=int, default=50)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--selection", help="path for the selection JSON")
    p.set_defaults(func=cmd_fdr, stochastic=True)

    p = sub.add_parser("report", help="rank-coverage curve of a qualified set")
    p.add_argument("--ranking", help="ranking TSV (variable, score, rank)")
    p.add_argument("--qualified",
                   help="file of qualified variable names (one per line or comma-separated)")
    _add_common(p, stochastic=False)
    p.set_defaults(func=cmd_report, stochastic=False)
    return parser


# --- helpers ---------------------------------------------------------------

def _read_config(path):
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for ln, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{ln}: expected key=value")
                k, v = line.split("=", 1)
                out[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    return out


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = _read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        # config keys are flag names without the leading dashes
        known = {}
        for a in sub._actions:
            for opt in a.option_strings:
                known[opt.lstrip("-").replace("-", "_")] = a
        defaults = {}
        for k, v in cfg.items():
            if k not in known or k == "config":
                raise UsageError(f"unknown config key {k!r}")
            a = known[k]
            if isinstance(a, argparse._StoreTrueAction):
                defaults[a.dest] = v.lower() in ("1", "true", "yes", "on")
            else:
                defaults[a.dest] = v
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.stochastic and args.seed is None:
        raise UsageError(f"{args.command}: --seed is mandatory")
    return args


def _parse_cutoffs(text):
    if not text:
        return None
    spec = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        name, _, cuts = part.partition(":")
        spec[name.strip()] = [float(c) for c in cuts.split(",") if c.strip()]
    return DiscretizationSpec(spec)


def _load_dataset(args):
    if (args.input is None) == (args.example is None):
        raise UsageError("give exactly one data source: --in or --example")
    if args.input is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            d = load_csv(args.input, args.response, _parse_cutoffs(args.discretize), args.y_model)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    else:
        d = generate(_example_spec(args.example, args.n, args.mu0,
                                   args.data_seed if args.data_seed is not None else args.seed))
    return d if args.no_normalize else normalize_response(d)


def _example_spec(k, n, mu0, seed):
    if seed is None:
        raise UsageError("--example needs --seed or --data-seed")
    defaults = {1: 200, 2: 200, 3: 400, 4: 400, 5: 400}
    params = {}
    if k == 5 and mu0 is not None:
        params["mu0"] = mu0
    return ExampleSpec(f"ex{k}", n if n is not None else defaults[k], seed, params)


def _rule(args):
    params = None
    if args.rule_params:
        params = [float(c) for c in args.rule_params.split(",")]
    try:
        return stopping_rule(args.rule, params)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _names_to_idx(d, text):
    return [d.index_of(nm.strip()) for nm in text.split(",") if nm.strip()]


def _header(args) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_IN_HEADER}
    return f"# partret {args.command}\n# config: {json.dumps(cfg, sort_keys=True)}\n"


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _section(name, body):
    return f"# table: {name}\n{body}"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def _emit_json(args, doc):
    doc = {"command": args.command,
           "config": {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_IN_HEADER},
           **doc}
    _emit(args, json.dumps(doc, indent=1, default=_json_default) + "\n")


def _ranking_doc(r: RankingTable):
    return [{"variable": r.names[v], "score": r.scores[v], "rank": r.ranks[v],
             **{c: r.extra[c][v] for c in r.extra}} for v in r.order()]


def _retention_tsv(r: RankingTable):
    lines = ["variable\tsampled\tretained\trate\trank"]
    for v in r.order():
        lines.append(f"{r.names[v]}\t{int(r.extra['sampled'][v])}\t{int(r.extra['retained'][v])}"
                     f"\t{float(r.extra['rate'][v])!r}\t{_num(r.ranks[v])}")
    return "\n".join(lines) + "\n"


def _num(v):
    f = float(v)
    return str(int(f)) if f.is_integer() else repr(f)


# --- subcommands -----------------------------------------------------------

def cmd_simulate(args):
    if args.example is None:
        raise UsageError("simulate: --example is required")
    d = generate(_example_spec(args.example, args.n, args.mu0, args.seed))
    write_csv(d, args.out or sys.stdout)


def cmd_marginal(args):
    d = _load_dataset(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in MARGINAL_METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {MARGINAL_METHODS}")
    tables = {}
    for m in methods:
        try:
            tables[m] = marginal_ranking(d, m)
        except ValueError as e:
            raise UsageError(str(e)) from None
    if args.format == "json":
        _emit_json(args, {"rankings": {m: _ranking_doc(t) for m, t in tables.items()}})
        return
    cols = ["variable"] + [f"{m}_{c}" for m in methods for c in ("score", "rank")]
    lines = ["\t".join(cols)]
    for v in range(d.S):
        row = [d.names[v]]
        for m in methods:
            row += [repr(float(tables[m].scores[v])), _num(tables[m].ranks[v])]
        lines.append("\t".join(row))
    _emit(args, _header(args) + "\n".join(lines) + "\n")


def cmd_pairs(args):
    d = _load_dataset(args)
    if d.S < 2:
        raise UsageError("pair scan needs at least two variables")
    pairs = pair_scan(d)
    n_r = args.n_r if args.n_r is not None else default_n_r(len(pairs))
    try:
        r2 = rank_i2_first_appearance(pairs)
        r2f = rank_i2f(pairs, n_r)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.format == "json":
        _emit_json(args, {"n_r": n_r,
                          "pairs": [{"var_a": d.names[a], "var_b": d.names[b], "I": v}
                                    for a, b, v in pairs.top(args.top)],
                          "i2": _ranking_doc(r2), "i2f": _ranking_doc(r2f)})
        return
    lines = ["variable\ti2_rank\ti2f_count\ti2f_rank"]
    for v in r2f.order():
        lines.append(f"{d.names[v]}\t{_num(r2.ranks[v])}\t{int(r2f.scores[v])}\t{_num(r2f.ranks[v])}")
    text = (_header(args) + _section("pairs", pairs.to_tsv(args.top)) + "\n"
            + _section("ranking", "\n".join(lines) + "\n"))
    _emit(args, text)


def _screen_cfg(args, d):
    strata = None
    if args.strata_list:
        strata = (_names_to_idx(d, args.strata_list), args.k_in)
    elif args.k_in:
        raise UsageError("--k-in needs --strata-list")
    return ScreeningConfig(args.m, args.ns, args.seed, _rule(args), strata)


def cmd_screen(args):
    d = _load_dataset(args)
    cfg = _screen_cfg(args, d)
    tally = screen(d, cfg, args.workers)
    ranking = rank_by_retention(tally, args.rank_mode)
    traces = []
    if args.trace:
        k = min(args.trace, cfg.n_s)
        for sub in draw_subsets(d.S, cfg, 0, k):
            traces.append(eliminate(d, sub, cfg.rule).to_dict(d.names))
        path = args.trace_out or (args.out + ".trace.json" if args.out else None)
        if path and args.format == "tsv":
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(traces, fh, indent=1)
    if args.format == "json":
        doc = {"ranking": _ranking_doc(ranking)}
        if traces:
            doc["traces"] = traces
        _emit_json(args, doc)
        return
    text = _header(args) + _retention_tsv(ranking)
    if traces and not (args.trace_out or args.out):
        text += "\n" + _section("traces", json.dumps(traces) + "\n")
    _emit(args, text)


def _parse_stages(text):
    plan = []
    try:
        for part in text.split(","):
            L, k_in, n_s = (int(v) for v in part.split(":"))
            if L < 1 or k_in < 0 or n_s < 1:
                raise ValueError
            plan.append((L, k_in, n_s))
    except ValueError:
        raise UsageError(f"malformed stage plan {text!r}; expected L:k_in:n_s,...") from None
    if not plan:
        raise UsageError("empty stage plan")
    return plan


def _initial_ranking(args, d):
    if args.initial_ranking:
        r = read_ranking_tsv(args.initial_ranking)
        pos = {nm: i for i, nm in enumerate(r.names)}
        missing = [nm for nm in d.names if nm not in pos]
        if missing:
            raise DataError(f"initial ranking lacks variables {missing[:5]}")
        idx = [pos[nm] for nm in d.names]
        return RankingTable("file", r.scores[idx], r.ranks[idx], d.names)
    m = args.initial_method
    if m in MARGINAL_METHODS:
        try:
            return marginal_ranking(d, m)
        except ValueError as e:
            raise UsageError(str(e)) from None
    if m in ("i2", "i2f"):
        pairs = pair_scan(d)
        return rank_i2_first_appearance(pairs) if m == "i2" else rank_i2f(pairs)
    cfg = ScreeningConfig(args.m, args.ns, args.seed, _rule(args))
    return rank_by_retention(screen(d, cfg, args.workers))


def cmd_resuscitate(args):
    d = _load_dataset(args)
    plan = _parse_stages(args.stages)
    for L, k_in, _ in plan:
        if L > d.S:
            raise InfeasibleConfig(f"list size {L} exceeds S={d.S}")
    init = _initial_ranking(args, d)
    stages = resuscitate(d, init, plan, args.m, args.seed, _rule(args), args.workers)
    final = stages[-1]
    if args.format == "json":
        _emit_json(args, {"initial": _ranking_doc(init),
                          "stages": {r.method: _ranking_doc(r) for r in stages}})
        return
    cols = ["variable", "initial_rank"] + [f"{r.method}_rank" for r in stages]
    lines = ["\t".join(cols)]
    for v in final.order():
        lines.append("\t".join([d.names[v], _num(init.ranks[v]),
                                *(_num(r.ranks[v]) for r in stages)]))
    text = _header(args) + _section("side_by_side", "\n".join(lines) + "\n")
    for r in stages:
        text += "\n" + _section(r.method, _retention_tsv(r))
    _emit(args, text)


def cmd_fdr(args):
    d = _load_dataset(args)
    if not 0 < args.alpha <= 1:
        raise UsageError("--alpha must lie in (0, 1]")
    if args.permutations < 1:
        raise UsageError("--permutations must be >= 1")
    cfg = ScreeningConfig(args.m, args.ns, args.seed, _rule(args))
    study = run_permutation_study(d, cfg, args.permutations, args.seed, args.workers)
    curve = fdr_curve(study)
    try:
        thr = threshold_at(curve, args.alpha)
        chosen = select_variables(study.observed, thr)
    except NoThreshold:
        thr, chosen = None, {}
    selection = {"alpha": args.alpha, "threshold": thr,
                 "selected": [{"variable": d.names[v], "qualifying_subsets": c}
                              for v, c in chosen.items()]}
    if args.format == "json":
        _emit_json(args, {"curve": [{"threshold": t, "M1": m1, "p0_median": p, "fdr": f}
                                    for t, m1, p, f in zip(curve.thresholds, curve.m1,
                                                           curve.p0_median, curve.fdr)],
                          "selection": selection})
        return
    text = _header(args) + curve.to_tsv()
    sel_path = args.selection or (args.out + ".selection.json" if args.out else None)
    if sel_path:
        with open(sel_path, "w", encoding="utf-8") as fh:
            json.dump(selection, fh, indent=1, default=_json_default)
            fh.write("\n")
    else:
        text += "\n" + _section("selection", json.dumps(selection, default=_json_default) + "\n")
    _emit(args, text)


def _read_qualified(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    return [t.strip() for t in raw.replace(",", "\n").splitlines() if t.strip()]


def cmd_report(args):
    if not args.ranking or not args.qualified:
        raise UsageError("report: --ranking and --qualified are required")
    try:
        r = read_ranking_tsv(args.ranking)
    except OSError as e:
        raise DataError(f"cannot read {args.ranking}: {e}") from None
    names = _read_qualified(args.qualified)
    if not names:
        raise DataError("qualified set is empty")
    pos = {nm: i for i, nm in enumerate(r.names)}
    unknown = [nm for nm in names if nm not in pos]
    if unknown:
        raise DataError(f"qualified variables not in ranking: {unknown[:5]}")
    curve = rank_coverage_curve(r, [pos[nm] for nm in names])
    if args.format == "json":
        _emit_json(args, {"curve": [{"retained": c, "qualified_fraction": f} for c, f in curve]})
        return
    lines = ["retained\tqualified_fraction"] + [f"{c}\t{f!r}" for c, f in curve]
    _emit(args, _header(args) + "\n".join(lines) + "\n")


def _fail(args_json, code, exc):
    if args_json:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
              file=sys.stderr)
    else:
        print(f"partret: error: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv
    try:
        args = _parse(argv)
        args.func(args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except UsageError as e:
        return _fail(json_errors, EXIT_USAGE, e)
    except (DataError, FileNotFoundError) as e:
        return _fail(json_errors, EXIT_DATA, e)
    except (InfeasibleConfig, OverflowError) as e:
        return _fail(json_errors, EXIT_INFEASIBLE, e)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
