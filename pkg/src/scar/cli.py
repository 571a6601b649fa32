"""Command-line entry point.

Every command is deterministic given its inputs; JSON reports carry a schema
version and the fully resolved scenario so any published number can be rerun
from its own output. Exit codes: 0 ok, 2 validation, 3 capacity, 4
non-convergence without fallback, 5 guarantee-suite failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, equilibria, simulate
from .cr import cop_number, exact_capture_times, extract_cr_optimal_moves
from .errors import CapacityError, NonConvergenceError, NotAnEquilibriumError, ScarError, ValidationError
from .graph import Graph, builtin_graph, parse_graph, serialize_graph
from .payoffs import GameParams
from .profiles import PositionalProfile
from .states import build_state_space, DEFAULT_STATE_CAP

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_NONCONVERGENCE = 4
EXIT_SUITE_FAILURE = 5


class Scenario:
    """Resolved inputs of one solve: graph, player count, parameters, start."""

    def __init__(self, graph: Graph, n_players: int, gamma: float, epsilon=None,
                 split_equivalent=False, allow_extended_epsilon=False, s0=None,
                 tol=1e-10, ne_tol=1e-8, state_cap=DEFAULT_STATE_CAP):
        self.graph = graph
        self.params = GameParams(n_players, gamma, epsilon,
                                 split_equivalent=split_equivalent,
                                 allow_extended_epsilon=allow_extended_epsilon)
        self.s0 = s0
        self.tol = tol
        self.ne_tol = ne_tol
        self.state_cap = state_cap

    def space(self):
        space = build_state_space(self.graph, self.params.n_players, self.state_cap)
        if self.s0 is not None:
            idx = space.index_of(tuple(self.s0))
            if idx == space.terminal_index:
                raise ValidationError("initial state must not be the terminal state")
        return space

    def to_json_obj(self):
        p = self.params
        return {
            "graph": serialize_graph(self.graph),
            "n_players": p.n_players,
            "gamma": p.gamma,
            "epsilon": p.epsilon,
            "split_equivalent": p.split_equivalent,
            "allow_extended_epsilon": p.allow_extended_epsilon,
            "in_omega_tilde": p.in_omega_tilde,
            "s0": list(self.s0) if self.s0 is not None else None,
            "tol": self.tol,
            "ne_tol": self.ne_tol,
            "state_cap": self.state_cap,
        }


def _load_graph(args) -> Graph:
    if getattr(args, "scenario", None):
        doc = json.loads(Path(args.scenario).read_text())
        gdoc = doc.get("graph")
        if isinstance(gdoc, dict):
            if "edge_list" in gdoc:
                return parse_graph(gdoc["edge_list"])
            if "path" in gdoc:
                return parse_graph(Path(gdoc["path"]).read_text())
            if "builtin" in gdoc:
                return builtin_graph(gdoc["builtin"])
        raise ValidationError("scenario must carry graph.edge_list, graph.path, or graph.builtin")
    if getattr(args, "graph", None):
        return parse_graph(Path(args.graph).read_text())
    if getattr(args, "builtin", None):
        return builtin_graph(args.builtin)
    raise ValidationError("no graph given: use --scenario, --graph FILE, or --builtin NAME")


def _parse_s0(text, n_players):
    parts = [int(x) for x in text.split(",")]
    if len(parts) != n_players + 1:
        raise ValidationError(
            f"--s0 needs {n_players} positions plus the mover, got {text!r}")
    return tuple(parts)


def _load_scenario(args) -> Scenario:
    doc = {}
    if getattr(args, "scenario", None):
        doc = json.loads(Path(args.scenario).read_text())
    graph = _load_graph(args)
    n_players = getattr(args, "n", None) or doc.get("n_players") or doc.get("n")
    if n_players is None:
        raise ValidationError("player count missing: --n or scenario n_players")
    gamma = args.gamma if args.gamma is not None else doc.get("gamma")
    if gamma is None:
        raise ValidationError("gamma missing: --gamma or scenario gamma")
    split = bool(getattr(args, "split_equivalent", False) or doc.get("split_equivalent"))
    epsilon = None
    if not split:
        epsilon = args.epsilon if args.epsilon is not None else doc.get("epsilon")
        if epsilon is None:
            raise ValidationError("epsilon missing: --epsilon, --split-equivalent, or scenario")
    s0 = None
    if getattr(args, "s0", None):
        s0 = _parse_s0(args.s0, int(n_players))
    elif doc.get("s0"):
        s0 = tuple(doc["s0"])
    tolerances = doc.get("tolerances", {})
    return Scenario(
        graph, int(n_players), float(gamma), epsilon,
        split_equivalent=split,
        allow_extended_epsilon=bool(getattr(args, "allow_extended_epsilon", False)
                                    or doc.get("allow_extended_epsilon")),
        s0=s0,
        tol=float(getattr(args, "tol", None) or tolerances.get("value", 1e-10)),
        ne_tol=float(getattr(args, "ne_tol", None) or tolerances.get("ne_gap", 1e-8)),
        state_cap=int(getattr(args, "state_cap", None) or doc.get("state_cap")
                      or DEFAULT_STATE_CAP),
    )


def _grid_from(args, n_players):
    if getattr(args, "grid", None):
        gpart, _, epart = args.grid.partition(";")
        gammas = [float(x) for x in gpart.split(",") if x]
        epsilons = [float(x) for x in epart.split(",") if x]
        return analysis.make_grid(n_players, gammas, epsilons)
    return analysis.make_grid(n_players)


def _emit(obj, args):
    print(json.dumps(obj, indent=2, default=_json_default))


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if x is math.inf:
        return "inf"
    return str(x)


def _report(command, scenario, result):
    return {"schema_version": SCHEMA_VERSION, "command": command,
            "scenario": scenario.to_json_obj() if scenario else None, "result": result}


# ---------------------------------------------------------------------------
# Commands.

def cmd_solve(args):
    scenario = _load_scenario(args)
    space = scenario.space()
    params = scenario.params
    method = "positional-sweeps"
    try:
        res = equilibria.solve_positional_ne(space, params, tol=scenario.tol,
                                             ne_tol=scenario.ne_tol)
        profile = res.profile
        values = res.values
        gaps = res.verification.summary()
        extra = {"sweeps": res.sweeps,
                 "attainment_residual": res.attainment_residual,
                 "consistency_residual": res.consistency_residual}
    except (NonConvergenceError, NotAnEquilibriumError) as exc:
        if args.no_fallback:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        method = "threat-fallback"
        threat = equilibria.build_threat_profile(space, params, tol=scenario.tol)
        ver = equilibria.verify_threat_ne(space, params, threat, tol=scenario.ne_tol,
                                          value_tol=scenario.tol)
        profile = threat
        values = simulate.exact_profile_values(space, params, threat.cooperative.move)
        gaps = ver.summary()
        extra = {"fallback_reason": str(exc)}
    s0 = scenario.s0 or space.state_at(int(np.flatnonzero(space.is_noncapture)[0]))
    idx0 = space.index_of(tuple(s0))
    trace = simulate.run(space, params, profile, idx0)
    result = {
        "method": method,
        "values_at_s0": [float(values[m][idx0]) for m in range(params.n_players)],
        "capture_time": None if trace.capture_time == math.inf else trace.capture_time,
        "capturing_set": list(trace.capturing_set),
        "termination": trace.termination,
        "trace": trace.to_json_obj(),
        "verification": gaps,
        **extra,
    }
    _emit(_report("solve", scenario, result), args)
    return EXIT_OK


def cmd_reproduce_example(args):
    demo = analysis.delayed_capture_demo(args.gamma, args.epsilon)
    if args.json:
        result = {
            "gamma": demo.gamma, "epsilon": demo.epsilon, "s0": list(demo.s0),
            "cooperative": {"table": simulate.render_turn_table(demo.cooperative_trace),
                            "capture_time": demo.cooperative_trace.capture_time,
                            "captured_by": list(demo.cooperative_trace.capturing_set),
                            "payoffs": list(demo.cooperative_payoffs),
                            "symbolic": demo.cooperative_symbolic},
            "deviation": {"table": simulate.render_turn_table(demo.deviation_trace),
                          "capture_time": demo.deviation_trace.capture_time,
                          "captured_by": list(demo.deviation_trace.capturing_set),
                          "payoffs": list(demo.deviation_payoffs),
                          "symbolic": demo.deviation_symbolic},
            "threshold": demo.threshold,
            "threshold_exponent": demo.threshold_exponent,
            "deviation_profitable": demo.deviation_profitable,
            "consistent": demo.prediction_consistent,
        }
        _emit(_report("reproduce-example", None, result), args)
        return EXIT_OK
    print("delayed-capture example: 9-vertex tree, two pursuers, one evader")
    print(f"s0: C1=6 C2=1 R=4, C1 moves first; gamma={demo.gamma} eps={demo.epsilon}")
    print()
    print("cooperative play (both pursuers greedy, evader optimal):")
    print(simulate.render_turn_table(demo.cooperative_trace))
    print(f"capture at turn {demo.cooperative_trace.capture_time} by "
          f"C{demo.cooperative_trace.capturing_set[0]}")
    print("payoffs: " + ", ".join(
        f"Q{i+1} = {s} = {v:.6f}" for i, (s, v) in
        enumerate(zip(demo.cooperative_symbolic, demo.cooperative_payoffs))))
    print()
    print("deviation play (C1 retreats to vertex 7 first, then chases):")
    print(simulate.render_turn_table(demo.deviation_trace))
    print(f"capture at turn {demo.deviation_trace.capture_time} by "
          f"C{demo.deviation_trace.capturing_set[0]}")
    print("payoffs: " + ", ".join(
        f"Q{i+1} = {s} = {v:.6f}" for i, (s, v) in
        enumerate(zip(demo.deviation_symbolic, demo.deviation_payoffs))))
    print()
    print(f"retreat pays iff gamma > (eps/(1-eps))^(1/{demo.threshold_exponent})"
          f" = {demo.threshold:.6f}")
    verdict = "profitable" if demo.deviation_profitable else "not profitable"
    check = "PASS" if demo.prediction_consistent else "FAIL"
    print(f"gamma={demo.gamma}: deviation {verdict}; threshold criterion agrees: {check}")
    return EXIT_OK if demo.prediction_consistent else EXIT_SUITE_FAILURE


def cmd_copnumber(args):
    g = _load_graph(args)
    if args.selfish:
        rep = analysis.selfish_cop_number(g, max_cops=args.max_cops, verify=args.verify,
                                          state_cap=args.state_cap or DEFAULT_STATE_CAP)
        result = {
            "selfish_cop_number": rep.value,
            "cop_number": rep.cop_result.value,
            "finite_by_cops": rep.cop_result.finite_by_cops,
            "verified_points": rep.verified_points,
            "escape_witness": rep.escape_witness,
            "consistent": rep.consistent,
        }
    else:
        res = cop_number(g, max_cops=args.max_cops,
                         state_cap=args.state_cap or DEFAULT_STATE_CAP)
        result = {"cop_number": res.value, "finite_by_cops": res.finite_by_cops}
    _emit({"schema_version": SCHEMA_VERSION, "command": "copnumber",
           "graph": serialize_graph(g), "max_cops": args.max_cops, "result": result}, args)
    if args.selfish and args.verify and not result["consistent"]:
        return EXIT_SUITE_FAILURE
    return EXIT_OK


def cmd_sweep(args):
    scenario = _load_scenario(args)
    grid = _grid_from(args, scenario.params.n_players)
    s0_list = [scenario.s0] if scenario.s0 is not None else None
    rows = analysis.sweep(scenario.graph, scenario.params.n_players, grid=grid,
                          s0_list=s0_list, tol=scenario.ne_tol, value_tol=scenario.tol,
                          state_cap=scenario.state_cap)
    if args.json:
        _emit(_report("sweep", scenario, {"rows": rows}), args)
    else:
        sys.stdout.write(analysis.sweep_csv(rows))
    return EXIT_OK


def cmd_verify(args):
    scenario = _load_scenario(args)
    space = scenario.space()
    params = scenario.params
    if args.profile == "cr-optimal":
        _, rep = equilibria.check_cr_optimal_ne(space, params, tol=scenario.ne_tol,
                                                value_tol=scenario.tol)
        result = rep.summary()
        if scenario.s0 is not None:
            result["is_ne_at_s0"] = rep.is_ne_at(space.index_of(tuple(scenario.s0)))
    elif args.profile in ("threat", "capturing-threat"):
        if args.profile == "threat":
            threat = equilibria.build_threat_profile(space, params, tol=scenario.tol)
        else:
            threat = equilibria.build_capturing_threat_ne(space, params, tol=scenario.tol)
        rep = equilibria.verify_threat_ne(space, params, threat, tol=scenario.ne_tol,
                                          value_tol=scenario.tol)
        result = rep.summary()
        result["captures_everywhere"] = rep.captures_everywhere()
    elif args.profile == "noncapturing":
        constr = equilibria.build_noncapturing_ne(space, params, s0=scenario.s0,
                                                  state_cap=scenario.state_cap)
        rep = equilibria.verify_noncapturing_ne(space, params, constr, tol=scenario.ne_tol,
                                                value_tol=scenario.tol)
        trace = simulate.run(space, params, constr.profile, constr.s0_index)
        result = {"is_ne": rep.is_ne, "gains": rep.per_player_gain,
                  "s0": list(constr.s0), "termination": trace.termination}
    else:  # positional-ne
        res = equilibria.solve_positional_ne(space, params, tol=scenario.tol,
                                             ne_tol=scenario.ne_tol)
        result = {"sweeps": res.sweeps,
                  "attainment_residual": res.attainment_residual,
                  "consistency_residual": res.consistency_residual,
                  **res.verification.summary()}
    _emit(_report("verify", scenario, {"profile": args.profile, **result}), args)
    return EXIT_OK if result.get("is_ne", True) else EXIT_SUITE_FAILURE


def cmd_simulate(args):
    scenario = _load_scenario(args)
    space = scenario.space()
    params = scenario.params
    if scenario.s0 is None:
        raise ValidationError("simulate needs --s0")
    idx0 = space.index_of(tuple(scenario.s0))
    if args.profile == "cr-optimal":
        table = exact_capture_times(space)
        profile = PositionalProfile(space, extract_cr_optimal_moves(space, table),
                                    validate=False)
    elif args.profile == "threat":
        profile = equilibria.build_threat_profile(space, params, tol=scenario.tol)
    elif args.profile == "capturing-threat":
        profile = equilibria.build_capturing_threat_ne(space, params, tol=scenario.tol)
    else:
        raise ValidationError(f"unknown profile {args.profile!r}")
    plan = {}
    if args.plan:
        if args.deviator is None:
            raise ValidationError("--plan needs --deviator")
        for item in args.plan.split(","):
            turn, _, action = item.partition(":")
            plan[int(turn)] = int(action)
    if plan:
        trace = simulate.run_with_forced_deviation(space, params, profile, args.deviator,
                                                   plan, idx0, turn_cap=args.turn_cap)
    else:
        trace = simulate.run(space, params, profile, idx0, turn_cap=args.turn_cap)
    if args.table:
        print(simulate.render_turn_table(trace))
        t = trace.capture_time
        print(f"termination: {trace.termination}"
              + (f", capture at turn {t} by {trace.capturing_set}" if t != math.inf else ""))
    else:
        payoffs = (list(simulate.payoffs_of(params, trace))
                   if trace.termination != "turn_cap" else None)
        result = {"trace": trace.to_json_obj(), "termination": trace.termination,
                  "capture_time": None if trace.capture_time == math.inf else trace.capture_time,
                  "capturing_set": list(trace.capturing_set), "payoffs": payoffs}
        _emit(_report("simulate", scenario, result), args)
    return EXIT_OK


def cmd_equivalence(args):
    g = _load_graph(args)
    n_players = args.n or 3
    rep = analysis.payoff_equivalence_check(g, n_players, trials=args.trials,
                                            seed=args.seed, gamma=args.gamma or 0.7,
                                            state_cap=args.state_cap or DEFAULT_STATE_CAP)
    result = {
        "trials": rep.trials,
        "all_sums_exact": rep.all_sums_exact,
        "failures": rep.failures,
        "cr_optimal_is_ne": rep.cr_optimal_is_ne,
        "max_gap": rep.max_gap,
    }
    _emit({"schema_version": SCHEMA_VERSION, "command": "equivalence",
           "graph": serialize_graph(g), "n_players": n_players, "seed": args.seed,
           "result": result}, args)
    return EXIT_OK if rep.all_sums_exact and rep.cr_optimal_is_ne else EXIT_SUITE_FAILURE


def cmd_theorems(args):
    scenario = _load_scenario(args)
    grid = _grid_from(args, scenario.params.n_players)
    reports = analysis.theorem_suite(scenario.graph, scenario.params.n_players, grid=grid,
                                     tol=scenario.ne_tol, value_tol=scenario.tol,
                                     state_cap=scenario.state_cap)
    result = [r.summary() for r in reports]
    _emit(_report("theorems", scenario, {"reports": result}), args)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_SUITE_FAILURE


# ---------------------------------------------------------------------------

def _add_common(p, s0=True, grid=False):
    p.add_argument("--scenario", help="JSON scenario file")
    p.add_argument("--graph", help="edge-list graph file")
    p.add_argument("--builtin", help="named graph, e.g. petersen, path:4, cycle:5")
    p.add_argument("--n", type=int, help="number of players (pursuers + 1)")
    p.add_argument("--gamma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--split-equivalent", action="store_true", dest="split_equivalent")
    p.add_argument("--allow-extended-epsilon", action="store_true",
                   dest="allow_extended_epsilon")
    p.add_argument("--tol", type=float, help="value-iteration residual tolerance")
    p.add_argument("--ne-tol", type=float, dest="ne_tol", help="equilibrium gap tolerance")
    p.add_argument("--state-cap", type=int, dest="state_cap")
    if s0:
        p.add_argument("--s0", help="initial state as x1,...,xN,p")
    if grid:
        p.add_argument("--grid", help="gamma and eps lists: g1,g2,...;e1,e2,...")
    p.add_argument("--json", action="store_true", help="JSON output")


def build_parser():
    parser = argparse.ArgumentParser(prog="scar",
                                     description="selfish pursuit games: solve, simulate, verify")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="positional equilibrium with threat fallback")
    _add_common(p)
    p.add_argument("--no-fallback", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("reproduce-example", help="built-in delayed-capture demonstration")
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_reproduce_example)

    p = sub.add_parser("copnumber", help="cop number by exact game solving")
    p.add_argument("--scenario")
    p.add_argument("--graph")
    p.add_argument("--builtin")
    p.add_argument("--max-cops", type=int, default=3, dest="max_cops")
    p.add_argument("--selfish", action="store_true")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--state-cap", type=int, dest="state_cap")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_copnumber)

    p = sub.add_parser("sweep", help="grid sweep CSV over (gamma, eps, s0)")
    _add_common(p, grid=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="verify a named profile as an equilibrium")
    _add_common(p)
    p.add_argument("--profile", default="cr-optimal",
                   choices=["cr-optimal", "threat", "capturing-threat", "noncapturing",
                            "positional-ne"])
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="play a profile out from --s0")
    _add_common(p)
    p.add_argument("--profile", default="cr-optimal",
                   choices=["cr-optimal", "threat", "capturing-threat"])
    p.add_argument("--deviator", type=int)
    p.add_argument("--plan", help="forced moves t1:a1,t2:a2,...")
    p.add_argument("--turn-cap", type=int, dest="turn_cap")
    p.add_argument("--table", action="store_true", help="render the turn table")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("theorems", help="run the guarantee suites for this graph")
    _add_common(p, grid=True)
    p.set_defaults(func=cmd_theorems)

    p = sub.add_parser("equivalence",
                       help="split-equivalent payoff battery with random profiles")
    p.add_argument("--scenario")
    p.add_argument("--graph")
    p.add_argument("--builtin")
    p.add_argument("--n", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--state-cap", type=int, dest="state_cap")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_equivalence)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # downstream consumer (head, less) closed the pipe; exit quietly
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except ScarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
