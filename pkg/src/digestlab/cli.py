"""Command-line pipeline: simulate, fit, score, and pair diagnostics.

Exit codes: 0 on success, 1 on any input or validation error, 2 when a fit
completes but no candidate factor count survives the rejection rules.
Reports are JSON with floats in shortest round-trip form (up to 17
significant digits), so identical inputs reproduce identical bytes apart
from the ``created_at`` timestamp.
"""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import contextmanager
from datetime import datetime, timezone

from . import __version__
from .bifactor import ReliabilityReport
from .corr import pearson, polychoric
from .digestion import (average_evaluations, builtin_weights,
                        load_evaluations, load_weight_set, score,
                        weights_from_report)
from .instrument import (load_instrument, load_responses, pair_asymmetry,
                         write_responses)
from .select import SelectionConfig, SelectionTrace, select_factor_count
from .synth import generate_continuous, generate_likert, load_generator_spec

SEED_ENV_VAR = "DIGESTLAB_SEED"

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NO_MODEL = 2


class _Parser(argparse.ArgumentParser):
    # Usage errors must exit 1: code 2 is reserved for the no-model outcome.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


@contextmanager
def _open_out(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValueError(
            f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from None


def _dump_json(payload, fh) -> None:
    import json

    json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=2)
    fh.write("\n")


def _report_payload(report: ReliabilityReport | None):
    if report is None:
        return None
    return {
        "k": report.k,
        "omega_total": report.omega_total,
        "omega_general": report.omega_general,
        "omega_group": list(report.omega_group),
        "ecv": report.ecv,
        "rmsr": report.rmsr,
    }


def _trace_payload(trace: SelectionTrace):
    entries = []
    for e in trace.entries:
        entries.append({
            "k": e.k,
            "accepted": e.verdict.accepted,
            "reasons": list(e.verdict.reasons),
            "report": _report_payload(e.report),
            "dominance": list(e.dominance),
        })
    return entries


def run_fit(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.instrument is not None:
        instrument = load_instrument(args.instrument)
        responses = load_responses(args.responses, instrument)
        source = "file"
    else:
        responses = load_responses(args.responses)
        bundled = load_instrument()
        if set(responses.item_ids) == set(bundled.ids):
            responses = load_responses(args.responses, bundled)
            source = "bundled"
        else:
            source = "responses-header"
    estimator = pearson if args.corr == "pearson" else polychoric
    corr = estimator(responses)
    config = SelectionConfig(
        k_min=args.k_min, k_max=args.k_max,
        min_group_omega=args.min_group_omega,
        max_general_dominance=args.max_dominance,
        corr_kind=args.corr, seed=seed)
    trace = select_factor_count(corr, config)

    payload = {
        "tool": "digestlab",
        "version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "corr": args.corr,
        "n_rows": responses.n_rows,
        "instrument": {
            "source": source,
            "n_items": responses.n_items,
            "item_ids": list(responses.item_ids),
        },
        "config": {
            "k_min": config.k_min,
            "k_max": config.k_max,
            "min_group_omega": config.min_group_omega,
            "max_dominance": config.max_general_dominance,
        },
        "trace": _trace_payload(trace),
        "chosen_k": trace.chosen_k,
        "solution": None,
        "report": None,
        "weights": None,
    }
    if trace.has_model:
        chosen = trace.chosen()
        names = [f"F{i + 1}" for i in range(chosen.k)]
        weights = weights_from_report(chosen.report, names)
        payload["solution"] = {
            "general": [float(v) for v in chosen.solution.general],
            "group": [[float(v) for v in row] for row in chosen.solution.group],
            "uniqueness": [float(v) for v in chosen.solution.uniqueness],
        }
        payload["report"] = _report_payload(chosen.report)
        payload["weights"] = {
            "label": weights.label,
            "entries": [[n, w] for n, w in weights.entries],
        }
    with _open_out(args.out) as fh:
        _dump_json(payload, fh)
    return EXIT_OK if trace.has_model else EXIT_NO_MODEL


def run_score(args) -> int:
    weights = (builtin_weights(args.media) if args.media is not None
               else load_weight_set(args.weights))
    sheet = load_evaluations(args.ev)
    ev = average_evaluations(sheet)
    result = score(weights, ev)
    payload = {
        "label": weights.label,
        "n_raters": sheet.n_raters,
        "rho": result.rho,
        "contributions": [[n, c] for n, c in result.contributions],
        "weights": [[n, w] for n, w in weights.entries],
        "ev": {n: ev[n] for n in weights.factor_names},
    }
    with _open_out(args.out) as fh:
        _dump_json(payload, fh)
    return EXIT_OK


def run_simulate(args) -> int:
    spec = load_generator_spec(args.spec).with_overrides(n=args.n,
                                                         seed=args.seed)
    with _open_out(args.out) as fh:
        if args.likert:
            write_responses(generate_likert(spec), fh)
        else:
            import csv

            writer = csv.writer(fh)
            writer.writerow(spec.resolved_item_ids())
            for row in generate_continuous(spec):
                writer.writerow([repr(float(v)) for v in row])
    return EXIT_OK


def run_pairs(args) -> int:
    instrument = load_instrument(args.instrument)
    responses = load_responses(args.responses, instrument)
    stats = pair_asymmetry(responses, instrument)
    with _open_out(args.out) as fh:
        import csv

        writer = csv.writer(fh)
        writer.writerow(["pair_id", "r", "deviation", "error"])
        for s in stats:
            if s.error is None:
                writer.writerow([s.pair_id, repr(float(s.r)),
                                 repr(float(s.deviation)), ""])
            else:
                writer.writerow([s.pair_id, "", "", s.error])
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="digestlab",
                     description="Bifactor reliability pipeline and "
                                 "digestion-efficiency scoring.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit bifactor models and select a "
                                     "factor count")
    fit.add_argument("--responses", required=True, help="responses CSV")
    fit.add_argument("--instrument", default=None,
                     help="instrument JSON (default: bundled instrument "
                          "when the header matches, else header-only)")
    fit.add_argument("--corr", choices=("pearson", "polychoric"),
                     default="pearson", help="correlation estimator")
    fit.add_argument("--k-min", type=int, default=2)
    fit.add_argument("--k-max", type=int, default=6)
    fit.add_argument("--min-group-omega", type=float, default=0.1,
                     help="reject k when an omega_group falls below this")
    fit.add_argument("--max-dominance", type=float, default=0.6,
                     help="reject k when general-factor dominance reaches "
                          "this on some cluster")
    fit.add_argument("--seed", type=int, default=None,
                     help=f"rotation-restart seed (default: ${SEED_ENV_VAR} "
                          "or 0)")
    fit.add_argument("--out", default=None, help="report path (default: "
                                                 "stdout)")
    fit.set_defaults(handler=run_fit)

    scr = sub.add_parser("score", help="compute the digestion-efficiency "
                                       "score rho")
    which = scr.add_mutually_exclusive_group(required=True)
    which.add_argument("--media", choices=("A", "B", "C", "D"),
                       help="built-in weight preset")
    which.add_argument("--weights", help="weight-set JSON file")
    scr.add_argument("--ev", required=True,
                     help="evaluation sheet CSV (header = factor names, "
                          "one row per rater)")
    scr.add_argument("--out", default=None)
    scr.set_defaults(handler=run_score)

    sim = sub.add_parser("simulate", help="generate synthetic responses "
                                          "from a population spec")
    sim.add_argument("--spec", required=True, help="generator spec JSON")
    sim.add_argument("--n", type=int, default=None, help="override row count")
    sim.add_argument("--seed", type=int, default=None, help="override seed")
    sim.add_argument("--likert", action=argparse.BooleanOptionalAction,
                     default=True,
                     help="discretize to 6 categories (--no-likert writes "
                          "continuous scores)")
    sim.add_argument("--out", default=None)
    sim.set_defaults(handler=run_simulate)

    prs = sub.add_parser("pairs", help="per-pair mirror diagnostics")
    prs.add_argument("--responses", required=True)
    prs.add_argument("--instrument", default=None,
                     help="instrument JSON (default: bundled)")
    prs.add_argument("--out", default=None)
    prs.set_defaults(handler=run_pairs)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse --help / usage errors
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
