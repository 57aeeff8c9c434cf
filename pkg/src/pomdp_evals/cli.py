"""Command-line front end: scenario validation, value and payoff computation,
ergodic diagnostics, invariance residuals, and pinned reproduction runs."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from .chain import (ergodic_decomposition, liminf_value_transducer,
                    mixing_threshold, product_chain)
from .errors import (BudgetExceededError, InvalidInputError, PomdpEvalError,
                     ScenarioValidationError, TruncationError)
from .evaluations import (evaluation_from_spec, irregularity_exact,
                          irregularity_mc, make_evaluation)
from .instances import builtin_scenario, builtin_strategy
from .measures import SupportedMeasure, invariance_residual
from .model import Scenario, load_scenario
from .playspace import DEFAULT_NODE_BUDGET
from .strategies import (StationaryStrategy, Transducer, enumerate_transducers,
                         transducer_from_dict)
from .values import (asymptotic_value_estimate, limsup_belief_payoff_mc,
                     value_discounted, value_n,
                     weighted_payoff_and_irregularity_mc,
                     weighted_payoff_exact, weighted_payoff_mc)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_BUDGET = 2
EXIT_USAGE = 64

CSV_COLUMNS = ("command", "instance", "parameter", "value", "error_bound",
               "method", "seed")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n{self.format_usage()}")


def _record(command, instance, parameter, value, error_bound, method, seed=None,
            **extra) -> dict:
    rec = {
        "command": command,
        "instance": instance,
        "parameter": parameter,
        "value": None if value is None else float(value),
        "error_bound": None if error_bound is None else float(error_bound),
        "method": method,
        "seed": seed,
    }
    rec.update(extra)
    return rec


def _emit(records, fmt: str, timing: float = None) -> None:
    if fmt == "json":
        doc = {"records": records}
        if timing is not None:
            doc["wall_time_s"] = round(timing, 3)
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([rec.get(c, "") for c in CSV_COLUMNS])
        sys.stdout.write(buf.getvalue())


def _load(args) -> Scenario:
    src = args.scenario
    if src is None:
        raise InvalidInputError("--scenario is required for this command")
    if Path(src).exists():
        return load_scenario(src)
    return builtin_scenario(src)


def _strategy(args, scenario: Scenario):
    name = args.strategy
    if name is None:
        raise InvalidInputError("--strategy is required for this command")
    if Path(name).exists():
        doc = json.loads(Path(name).read_text())
        if doc.get("type") == "transducer":
            return transducer_from_dict(doc)
        raise InvalidInputError(f"strategy file {name} has unsupported type")
    return builtin_strategy(name, scenario.pomdp)


def _evaluation(args):
    spec = args.evaluation
    if spec is None:
        raise InvalidInputError("--evaluation is required for this command")
    if Path(spec).exists():
        spec = Path(spec).read_text()
    return evaluation_from_spec(spec)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_validate(args) -> list:
    scenario = _load(args)
    return [_record("validate", str(args.scenario), "states", scenario.pomdp.n_states,
                    0.0, "exact_dp", args.seed, ok=True)]


def _cmd_value(args) -> list:
    scenario = _load(args)
    p, x1 = scenario.pomdp, scenario.initial_belief
    out = []
    if args.horizon:
        rep = value_n(p, x1, args.horizon, budget=args.budget)
        out.append(_record("value", str(args.scenario), f"n={args.horizon}",
                           rep.value, rep.error_bound, rep.method, args.seed))
    if args.discount is not None:
        rep = value_discounted(p, x1, args.discount, budget=args.budget)
        out.append(_record("value", str(args.scenario), f"lam={args.discount}",
                           rep.value, rep.error_bound, rep.method, args.seed))
    if args.nmax:
        rep = asymptotic_value_estimate(p, x1, args.nmax, budget=args.budget)
        out.append(_record("value", str(args.scenario), f"nmax={args.nmax}",
                           rep.value, rep.error_bound, rep.method, args.seed))
    if not out:
        raise InvalidInputError("value needs --horizon, --discount, or --nmax")
    return out


def _cmd_evaluate(args) -> list:
    scenario = _load(args)
    p, x1 = scenario.pomdp, scenario.initial_belief
    strat = _strategy(args, scenario)
    e = _evaluation(args)
    horizon = args.horizon or 50
    if args.samples:
        rep = weighted_payoff_mc(p, x1, strat, e, horizon, args.samples, args.seed)
    else:
        rep = weighted_payoff_exact(p, x1, strat, e, horizon, budget=args.budget)
    return [_record("evaluate", str(args.scenario), e.kind, rep.value,
                    rep.error_bound, rep.method, args.seed)]


def _cmd_irregularity(args) -> list:
    scenario = _load(args)
    p, x1 = scenario.pomdp, scenario.initial_belief
    strat = _strategy(args, scenario)
    e = _evaluation(args)
    horizon = args.horizon or 50
    if args.samples:
        est = irregularity_mc(p, x1, strat, e, horizon, args.samples, args.seed)
        return [_record("irregularity", str(args.scenario), e.kind, est.mean,
                        3.0 * est.std_error, "monte_carlo", args.seed)]
    rep = irregularity_exact(p, x1, strat, e, horizon, budget=args.budget)
    return [_record("irregularity", str(args.scenario), e.kind, rep.value,
                    rep.tail_bound, "exact_dp", args.seed)]


def _cmd_ergodic(args) -> list:
    scenario = _load(args)
    strat = _strategy(args, scenario)
    if not isinstance(strat, Transducer):
        raise InvalidInputError("ergodic analysis needs a finite-memory strategy")
    chain = product_chain(scenario.pomdp, strat, scenario.initial_belief)
    dec = ergodic_decomposition(chain)
    out = []
    for d, (idx, pi, gamma, absorb) in enumerate(
            zip(dec.classes, dec.stationary, dec.class_values, dec.absorption)):
        out.append(_record("ergodic", str(args.scenario), f"class_{d}", gamma,
                           0.0, "ergodic_exact", args.seed,
                           states=[str(chain.labels[j]) for j in idx],
                           stationary=[float(v) for v in pi],
                           absorption=float(absorb)))
    out.append(_record("ergodic", str(args.scenario), "mixing_threshold",
                       mixing_threshold(chain, dec), 0.0, "ergodic_exact",
                       args.seed, transient=len(dec.transient)))
    return out


def _cmd_liminf(args) -> list:
    scenario = _load(args)
    p, x1 = scenario.pomdp, scenario.initial_belief
    strat = _strategy(args, scenario)
    if isinstance(strat, Transducer):
        v = liminf_value_transducer(p, x1, strat)
        return [_record("liminf", str(args.scenario), args.strategy, v, 0.0,
                        "ergodic_exact", args.seed)]
    rep = limsup_belief_payoff_mc(p, x1, strat, args.horizon or 1000,
                                  args.samples or 100, args.seed, mode="liminf",
                                  payoff_on=args.payoff_on,
                                  window_start=args.window_start)
    return [_record("liminf", str(args.scenario), args.strategy, rep.value,
                    rep.error_bound, rep.method, args.seed)]


def _cmd_limsup(args) -> list:
    scenario = _load(args)
    rep = limsup_belief_payoff_mc(
        scenario.pomdp, scenario.initial_belief, _strategy(args, scenario),
        args.horizon or 1000, args.samples or 100, args.seed, mode="limsup",
        payoff_on=args.payoff_on, window_start=args.window_start)
    return [_record("limsup", str(args.scenario), args.strategy, rep.value,
                    rep.error_bound, rep.method, args.seed)]


def _cmd_invariance(args) -> list:
    scenario = _load(args)
    p = scenario.pomdp
    if args.measure is None:
        raise InvalidInputError("--measure is required for invariance")
    mu = SupportedMeasure.from_dict(json.loads(Path(args.measure).read_text()))
    if args.strategy and Path(args.strategy).exists():
        doc = json.loads(Path(args.strategy).read_text())
        strat = StationaryStrategy(
            n_actions=p.n_actions,
            support=[np.asarray(x, dtype=float) for x in doc["support"]],
            action_dists=[np.asarray(r, dtype=float) for r in doc["rows"]],
        )
    else:
        uniform = np.full(p.n_actions, 1.0 / p.n_actions)
        strat = StationaryStrategy(
            n_actions=p.n_actions,
            support=[x for x, _ in mu.atoms],
            action_dists=[uniform for _ in mu.atoms],
        )
    res = invariance_residual(p, mu, strat)
    return [_record("invariance", str(args.scenario), "residual", res, 0.0,
                    "exact_dp", args.seed)]


# ---------------------------------------------------------------------------
# Reproduction harness
# ---------------------------------------------------------------------------

def _flagged(rec: dict, ok: bool) -> dict:
    rec["pass"] = bool(ok)
    return rec


def _reproduce_ex1(args) -> list:
    scenario = builtin_scenario("matching-frozen")
    p, x1 = scenario.pomdp, scenario.initial_belief
    l = args.l or 8
    baseline = value_n(p, x1, 50)
    e = make_evaluation("state_block_ex1", l=l)
    strat = builtin_strategy(f"hold:0:{l}:1", p)
    payoff = weighted_payoff_exact(p, x1, strat, e, horizon=2 * l)
    irr = irregularity_exact(p, x1, strat, e, horizon=2 * l)
    return [
        _flagged(_record("reproduce", "ex1", "baseline_value", baseline.value,
                         0.0, baseline.method, args.seed),
                 abs(baseline.value - 0.5) <= 1e-9),
        _flagged(_record("reproduce", "ex1", f"weighted_payoff_l{l}", payoff.value,
                         payoff.error_bound, payoff.method, args.seed),
                 abs(payoff.value - 1.0) <= 1e-9),
        _flagged(_record("reproduce", "ex1", f"irregularity_l{l}", irr.value,
                         irr.tail_bound, "exact_dp", args.seed),
                 abs(irr.value - 2.0 / l) <= 1e-9),
    ]


def _reproduce_ex2(args) -> list:
    scenario = builtin_scenario("uniform-redraw")
    p, x1 = scenario.pomdp, scenario.initial_belief
    l = args.l or 10
    samples = args.samples or 10_000
    # long enough that a length-l target run fits inside with prob ~1-e^-9
    horizon = args.horizon or max(50 * l, 9 * 2 ** (l + 1))
    strat = builtin_strategy("always:0", p)
    chain = product_chain(p, strat, x1)
    dec = ergodic_decomposition(chain)
    gamma = dec.class_values[0] if dec.n_classes == 1 else float("nan")
    e = make_evaluation("run_block_ex2", l=l)
    payoff, irr = weighted_payoff_and_irregularity_mc(
        p, x1, strat, e, horizon, samples, args.seed)
    return [
        _flagged(_record("reproduce", "ex2", "ergodic_value", gamma, 0.0,
                         "ergodic_exact", args.seed, classes=dec.n_classes),
                 dec.n_classes == 1 and abs(gamma - 0.5) <= 1e-9),
        _flagged(_record("reproduce", "ex2", f"mc_payoff_l{l}", payoff.value,
                         payoff.error_bound, payoff.method, args.seed),
                 payoff.value >= 0.99),
        _flagged(_record("reproduce", "ex2", f"mc_irregularity_l{l}", irr.mean,
                         3.0 * irr.std_error, "monte_carlo", args.seed),
                 abs(irr.mean - 2.0 / l) <= 3.0 * irr.std_error + 1e-9),
    ]


def _reproduce_blind(args) -> list:
    from .model import dirac_belief

    scenario = builtin_scenario("blind-switching")
    p, x1 = scenario.pomdp, scenario.initial_belief
    horizon = args.horizon or 100_000
    strat = builtin_strategy("doubling", p)
    out = []
    sweep = [liminf_value_transducer(p, x1, t)
             for t in enumerate_transducers(p, max_memory=2)]
    out.append(_flagged(
        _record("reproduce", "blind-limsup", "transducer_sweep", max(sweep), 0.0,
                "ergodic_exact", args.seed, n_transducers=len(sweep)),
        max(abs(v - 0.5) for v in sweep) <= 1e-9))
    sups, infs = [], []
    for k in range(2):
        rep = limsup_belief_payoff_mc(p, dirac_belief(2, k), strat, horizon, 1,
                                      args.seed, mode="limsup", payoff_on="state",
                                      window_start=1)
        sups.append(rep.value)
        rep = limsup_belief_payoff_mc(p, dirac_belief(2, k), strat, horizon, 1,
                                      args.seed, mode="liminf", payoff_on="state",
                                      window_start=1)
        infs.append(rep.value)
    out.append(_flagged(
        _record("reproduce", "blind-limsup", "limsup_proxy", min(sups), 0.0,
                "monte_carlo", args.seed, per_start=sups),
        min(sups) >= 0.9))
    out.append(_flagged(
        _record("reproduce", "blind-limsup", "liminf_proxy",
                sum(infs) / 2, 0.0, "monte_carlo", args.seed, per_start=infs),
        sum(infs) / 2 <= 0.2))
    return out


def _reproduce_known(args) -> list:
    scenario = builtin_scenario("blind-switching-lift")
    p, x1 = scenario.pomdp, scenario.initial_belief
    horizon = args.horizon or 2000
    samples = args.samples or 1000
    strat = builtin_strategy("always:0", p)
    state = limsup_belief_payoff_mc(p, x1, strat, horizon, samples, args.seed,
                                    mode="limsup", payoff_on="state")
    belief = limsup_belief_payoff_mc(p, x1, strat, horizon, samples, args.seed,
                                     mode="limsup", payoff_on="belief")
    gap = abs(state.value - belief.value)
    tol = max(state.error_bound, belief.error_bound, 1e-9)
    return [
        _record("reproduce", "known-payoffs", "state_limsup", state.value,
                state.error_bound, state.method, args.seed),
        _flagged(_record("reproduce", "known-payoffs", "belief_limsup",
                         belief.value, belief.error_bound, belief.method,
                         args.seed, gap=gap), gap <= tol),
    ]


_REPRODUCERS = {
    "ex1": _reproduce_ex1,
    "ex2": _reproduce_ex2,
    "blind-limsup": _reproduce_blind,
    "known-payoffs": _reproduce_known,
}


def _cmd_reproduce(args) -> list:
    if args.example not in _REPRODUCERS:
        raise InvalidInputError(
            f"unknown example {args.example!r}; choices: {', '.join(_REPRODUCERS)}"
        )
    return _REPRODUCERS[args.example](args)


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pomdp-evals",
                     description="values, payoffs and diagnostics for finite "
                                 "POMDPs with history-dependent stage weights")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", help="builtin name or JSON file")
        sp.add_argument("--strategy", help="builtin name or JSON file")
        sp.add_argument("--evaluation", help="inline JSON or file")
        sp.add_argument("--horizon", type=int, default=None)
        sp.add_argument("--samples", type=int, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET)
        sp.add_argument("--timing", action="store_true",
                        help="include wall time in JSON output")

    sp = sub.add_parser("validate", help="validate a scenario file")
    common(sp)
    sp.set_defaults(func=_cmd_validate)

    sp = sub.add_parser("value", help="finite-horizon / discounted / long-run values")
    common(sp)
    sp.add_argument("--discount", type=float, default=None)
    sp.add_argument("--nmax", type=int, default=None)
    sp.set_defaults(func=_cmd_value)

    sp = sub.add_parser("evaluate", help="weighted payoff of a strategy")
    common(sp)
    sp.set_defaults(func=_cmd_evaluate)

    sp = sub.add_parser("irregularity", help="irregularity of an evaluation")
    common(sp)
    sp.set_defaults(func=_cmd_irregularity)

    sp = sub.add_parser("ergodic", help="ergodic decomposition of a strategy chain")
    common(sp)
    sp.set_defaults(func=_cmd_ergodic)

    for name, func in (("liminf", _cmd_liminf), ("limsup", _cmd_limsup)):
        sp = sub.add_parser(name, help=f"{name} average payoff")
        common(sp)
        sp.add_argument("--payoff-on", choices=("state", "belief"), default="state")
        sp.add_argument("--window-start", type=int, default=None)
        sp.set_defaults(func=func)

    sp = sub.add_parser("invariance", help="transport residual of a belief measure")
    common(sp)
    sp.add_argument("--measure", help="JSON file with belief atoms")
    sp.set_defaults(func=_cmd_invariance)

    sp = sub.add_parser("reproduce", help="pinned example reproductions")
    sp.add_argument("example", choices=sorted(_REPRODUCERS))
    common(sp)
    sp.add_argument("--l", type=int, default=None)
    sp.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.monotonic()
    try:
        records = args.func(args)
    except (ScenarioValidationError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (BudgetExceededError, TruncationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PomdpEvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(records, args.format,
          timing=time.monotonic() - start if args.timing else None)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
