"""Command-line interface: ``heraldic evaluate | search | descent | chain | render``.

Schemes are given as JSON files or as ``builtin:NAME``. Exit codes: 0 on
success, 2 for unreadable or invalid input, 3 when the photon cap is hit.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from importlib import resources
from dataclasses import replace
from pathlib import Path

from . import __version__
from .cascade import chain_summary, load_chain, records_to_csv, run_chain, corrected_metrics
from .fock import DEFAULT_PHOTON_CAP, BeamSplitter, PhotonCapError
from .ga import GAConfig, load_config, run_ga
from .mesh import DescentConfig, descend
from .metrics import DetectorModel, metrics_report
from .schemes import TARGETS, SchemeError, Scheme, resolve_scheme, save_scheme, scheme_to_dict

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3

_INPUT_LABELS = ("|00>", "|01>", "|10>", "|11>")


SCHEMA_NAMES = ("scheme", "evaluate", "search", "descent", "chain", "render")


def load_schema(name: str) -> dict:
    """JSON schema shipped for the ``--output json`` document of a subcommand."""
    if name not in SCHEMA_NAMES:
        raise KeyError(name)
    return json.loads(resources.files("heraldic").joinpath("schemas", f"{name}.json").read_text(encoding="utf-8"))


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _fmt(value, digits: int = 12) -> str:
    if value is None:
        return "undefined"
    return f"{value:.{digits}f}"


def _table(rows, header=None) -> str:
    rows = [[str(c) for c in r] for r in rows]
    if header:
        rows = [list(header)] + rows
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def _csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().rstrip("\n")


def _load_scheme(ref: str) -> Scheme:
    try:
        return resolve_scheme(ref)
    except SchemeError as exc:
        raise CliError(str(exc)) from None


def _read_json(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"$: invalid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise CliError("$: expected an object")
    return doc


# -- evaluate -----------------------------------------------------------------


def cmd_evaluate(args) -> str:
    scheme = _load_scheme(args.scheme)
    target = TARGETS[args.target]
    detector = DetectorModel(args.detector)
    if args.corrected:
        report = corrected_metrics(scheme, target, detector, photon_cap=args.photon_cap)
    else:
        report = metrics_report(scheme, target, detector, photon_cap=args.photon_cap)
    doc = {"scheme": scheme.name or args.scheme, "target": args.target, **report.to_dict()}
    if args.output == "json":
        return json.dumps(doc, indent=2)
    rows = [[label, _fmt(pa), _fmt(pb)] for label, pa, pb in zip(_INPUT_LABELS, report.Pa_per_input,
                                                                  report.Pb_per_input)]
    if args.output == "csv":
        rows = [r + [_fmt(report.fidelity), _fmt(report.P), _fmt(report.Pa_mean), _fmt(report.Pb_mean)]
                for r in rows]
        return _csv(rows, ["input", "Pa", "Pb", "F", "P", "Pa_mean", "Pb_mean"])
    head = _table([
        ["scheme", doc["scheme"]],
        ["target", args.target],
        ["detector", detector.value],
        ["corrected", "yes" if report.corrected else "no"],
        ["F", _fmt(report.fidelity)],
        ["P", _fmt(report.P)],
    ])
    body = _table(rows, ["input", "Pa", "Pb"])
    tail = _table([["Pa_mean", _fmt(report.Pa_mean)], ["Pb_mean", _fmt(report.Pb_mean)]])
    return f"{head}\n\n{body}\n\n{tail}"


# -- search -------------------------------------------------------------------


def _ga_config(args) -> GAConfig:
    try:
        config = load_config(args.config)
    except OSError as exc:
        raise CliError(f"cannot read {args.config}: {exc.strerror}") from None
    except (ValueError, TypeError) as exc:
        raise CliError(f"$: invalid search config: {exc}") from None
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    return config


def cmd_search(args) -> str:
    config = _ga_config(args)
    telemetry = args.telemetry if args.telemetry else sys.stderr
    try:
        report = run_ga(config, telemetry=telemetry, checkpoint=args.checkpoint, resume=args.resume,
                        threads=args.threads, photon_cap=args.photon_cap)
    except (ValueError, SchemeError) as exc:
        if isinstance(exc, PhotonCapError):
            raise
        raise CliError(str(exc)) from None
    if args.best and report.best_scheme is not None:
        Path(args.best).write_text(save_scheme(report.best_scheme) + "\n", encoding="utf-8")
    best = report.hall_of_fame[0] if report.hall_of_fame else None
    summary = {
        "generations": report.generations,
        "evaluations": report.evaluations,
        "stopped": report.stopped,
        "best": best.to_dict() if best else None,
        "best_scheme": scheme_to_dict(report.best_scheme) if report.best_scheme is not None else None,
        "hall_of_fame": [s.to_dict() for s in report.hall_of_fame],
    }
    if args.output == "json":
        return json.dumps(summary, indent=2)
    rows = [[k, s.fitness, s.F, s.P, s.Pb_min] for k, s in enumerate(report.hall_of_fame)]
    header = ["rank", "fitness", "F", "P", "Pb_min"]
    if args.output == "csv":
        return _csv(rows, header)
    head = _table([["generations", report.generations], ["evaluations", report.evaluations],
                   ["stopped", report.stopped]])
    body = _table(rows, header) if rows else "no scheme passed the fitness threshold"
    return f"{head}\n\n{body}"


# -- descent ------------------------------------------------------------------


def cmd_descent(args) -> str:
    doc = _read_json(args.config)
    try:
        config = DescentConfig.from_dict(doc)
    except (ValueError, TypeError) as exc:
        raise CliError(f"$: invalid descent config: {exc}") from None
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    result = descend(config, threads=args.threads, photon_cap=args.photon_cap)
    if args.trajectory:
        with open(args.trajectory, "w", encoding="utf-8") as fh:
            for line in result.trajectory_lines():
                fh.write(line + "\n")
    scheme = result.scheme(config.herald)
    if args.best:
        Path(args.best).write_text(save_scheme(scheme) + "\n", encoding="utf-8")
    best = result.best
    summary = {"loss": best.loss, "F": best.info["F"], "P": best.info["P"], "accepted_steps": best.accepted,
               "restarts": len(result.restarts), "best_scheme": scheme_to_dict(scheme)}
    if args.output == "json":
        return json.dumps(summary, indent=2)
    rows = [[r, res.loss, res.info["F"], res.info["P"], res.accepted, res.stopped]
            for r, res in enumerate(result.restarts)]
    header = ["restart", "loss", "F", "P", "accepted", "stopped"]
    if args.output == "csv":
        return _csv(rows, header)
    head = _table([["best loss", _fmt(best.loss)], ["F", _fmt(best.info["F"])], ["P", _fmt(best.info["P"])]])
    return f"{head}\n\n{_table(rows, header)}"


# -- chain --------------------------------------------------------------------


def cmd_chain(args) -> str:
    try:
        text = Path(args.chain).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {args.chain}: {exc.strerror}") from None
    try:
        spec = load_chain(text, base_dir=Path(args.chain).parent)
    except SchemeError as exc:
        raise CliError(str(exc)) from None
    records = run_chain(spec, photon_cap=args.photon_cap)
    if args.output == "csv":
        return records_to_csv(records).rstrip("\n")
    summary = chain_summary(records, spec, TARGETS[args.target])
    if args.output == "json":
        doc = {
            "summary": {k: (float(v) if v is not None else None) for k, v in summary.items()},
            "records": [{
                "ancilla_counts": [list(c) for c in r.ancilla_counts],
                "clicks": [list(c) for c in r.clicks],
                "signal": list(r.signal),
                "amplitude": [r.amplitude.real, r.amplitude.imag],
                "probability": r.probability,
                "leak_probability": r.leak_probability,
                "herald_ok": r.herald_ok,
                "coincidence_ok": r.coincidence_ok,
                "accepted": r.accepted,
                "false_positive": r.false_positive,
            } for r in records],
        }
        return json.dumps(doc, indent=2)
    rows = [[" ".join("".join(map(str, c)) for c in r.ancilla_counts), "".join(map(str, r.signal)),
             f"{r.probability:.9f}", f"{r.leak_probability:.9f}", "yes" if r.accepted else "no",
             "yes" if r.false_positive else ""] for r in records]
    body = _table(rows, ["ancilla counts", "signal", "probability", "leak", "accepted", "false positive"])
    tail = _table([[k, _fmt(float(v)) if v is not None else "undefined"] for k, v in summary.items()])
    return f"{body}\n\n{tail}"


# -- render -------------------------------------------------------------------


def _mode_labels(scheme: Scheme):
    left, right = {}, {}
    if len(scheme.signal_modes) == 4:
        names = ("c0", "c1", "t0", "t1")
    else:
        names = ("s",)
    for name, mode in zip(names, scheme.signal_modes):
        left[mode] = f"{name}"
        right[mode] = name
    for mode, n_in, n_out in zip(scheme.ancilla_modes, scheme.ancilla_input, scheme.herald_pattern):
        left[mode] = f"a{mode} [{n_in}]"
        right[mode] = f"herald {n_out}"
    return left, right


def render(scheme: Scheme) -> str:
    """ASCII diagram: modes as rows, elements as columns, light travelling left to right."""
    left, right = _mode_labels(scheme)
    rows = [[] for _ in range(scheme.mode_count)]
    legend = []
    for k, el in enumerate(scheme.elements, start=1):
        if isinstance(el, BeamSplitter):
            label = f"B{k}"
            lo, hi = sorted(el.modes)
            legend.append(f"{label}: beam splitter modes {el.a},{el.b} theta={el.theta} phi={el.phi}")
        else:
            label = f"P{k}"
            lo = hi = el.mode
            legend.append(f"{label}: phase shifter mode {el.mode} phi={el.phi}")
        cell = f"[{label}]"
        width = len(cell) + 2
        for mode in range(scheme.mode_count):
            if mode in el.modes:
                rows[mode].append("-" + cell + "-")
            elif lo < mode < hi:
                rows[mode].append("-" * (width // 2) + "|" + "-" * (width - width // 2 - 1))
            else:
                rows[mode].append("-" * width)
    pad = max(len(v) for v in left.values())
    lines = []
    for mode in range(scheme.mode_count):
        lines.append(f"{mode:>2} {left[mode]:<{pad}} --{''.join(rows[mode])}-- {right[mode]}")
    title = scheme.name or "scheme"
    return "\n".join([title, *lines, "", *legend])


def cmd_render(args) -> str:
    scheme = _load_scheme(args.scheme)
    if args.output == "json":
        return json.dumps({"diagram": render(scheme), "scheme": scheme_to_dict(scheme)}, indent=2)
    return render(scheme)


# -- entry point --------------------------------------------------------------


def _threads_default() -> int:
    value = os.environ.get("HERALDIC_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # Subcommands repeat the global flags with suppressed defaults so that a
    # flag given before the subcommand is not overwritten by the subparser.
    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(None),
                        help="random seed; overrides the seed in a search or descent config (configs default to 0)")
    parser.add_argument("--output", choices=("json", "table", "csv"), default=default("table"))
    parser.add_argument("--photon-cap", type=int, default=default(DEFAULT_PHOTON_CAP), dest="photon_cap")
    parser.add_argument("--threads", type=int, default=default(None),
                        help="worker cap for parallel evaluation (default: $HERALDIC_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    parser = argparse.ArgumentParser(prog="heraldic", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", parents=[common], help="metrics of a scheme")
    p.add_argument("scheme")
    p.add_argument("--target", choices=sorted(TARGETS), default="cz")
    p.add_argument("--detector", choices=[d.value for d in DetectorModel], default="pnr")
    p.add_argument("--corrected", action="store_true", help="add the signal coincidence check to the herald")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("search", parents=[common], help="genetic search from a JSON or TOML config")
    p.add_argument("config")
    p.add_argument("--telemetry", help="JSON-lines file for per-generation telemetry (default: stderr)")
    p.add_argument("--checkpoint", help="checkpoint file rewritten after every generation")
    p.add_argument("--resume", action="store_true", help="continue from --checkpoint when it exists")
    p.add_argument("--best", help="write the best scheme to this file")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("descent", parents=[common], help="gradient descent over a universal mesh")
    p.add_argument("config")
    p.add_argument("--trajectory", help="JSON-lines file for per-step trajectories")
    p.add_argument("--best", help="write the best scheme to this file")
    p.set_defaults(func=cmd_descent)

    p = sub.add_parser("chain", parents=[common], help="outcome records of a gate chain")
    p.add_argument("chain")
    p.add_argument("--target", choices=sorted(TARGETS), default="cz")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("render", parents=[common], help="ASCII diagram of a scheme")
    p.add_argument("scheme")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.threads is None:
        args.threads = _threads_default()
    try:
        text = args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except PhotonCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except SchemeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
