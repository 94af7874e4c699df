"""Command-line surface: validate, divide, witness, pguess, simulate.

Exit codes: 0 success, 1 negative verdict (under --strict) or witness not
found, 2 input error, 3 numerical failure.  The seed defaults to the
DIVWITNESS_SEED environment variable, then 0; reports embed the seed and
tolerances so every number in them can be replayed.
"""

from __future__ import annotations

import csv
import os
import sys

import click
import numpy as np

from . import __version__, channels, discrimination, divisibility, families
from . import plots as plotting
from . import serialization as ser
from .errors import DivwitnessError, NumericalFailureError

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _seed_option(value):
    if value is not None:
        return int(value)
    return int(os.environ.get("DIVWITNESS_SEED", "0"))


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _write_trace_csv(path, values):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_index", "pguess"])
        for i, v in enumerate(values):
            writer.writerow([i, repr(float(v))])


def _load_mapping(path):
    obj = ser.load_file(path)
    return ser.mapping_from_json(obj)


@click.group()
@click.version_option(__version__)
def main():
    """Divisibility analysis and information-backflow witnesses for
    discrete-time dynamical mappings."""


@main.command()
@click.argument("input_file", type=click.Path(exists=True, dir_okay=False))
def validate(input_file):
    """Check a channel or mapping file for CPTP validity."""
    try:
        obj = ser.load_file(input_file)
    except ser.ParseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    try:
        if "channels" in obj:
            chans = [
                ser.channel_from_json(c, where=f"channels[{k}]")
                for k, c in enumerate(obj["channels"])
            ]
        else:
            chans = [ser.channel_from_json(obj)]
    except ser.ParseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    all_ok = True
    rows = []
    for k, n in enumerate(chans):
        rep = channels.validate_cptp(n)
        rows.append({
            "index": k,
            "cp_residual": rep.cp_residual,
            "tp_residual": rep.tp_residual,
            "verdict": "ok" if rep.verdict else "fail",
        })
        all_ok = all_ok and rep.verdict
    _emit(ser.dumps({"channels": rows, "valid": all_ok}), None)
    sys.exit(EXIT_OK if all_ok else EXIT_NEGATIVE)


@main.command()
@click.argument("input_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--route", type=click.Choice(["auto", "exact", "sdp"]), default="auto")
@click.option("--tol", type=float, default=divisibility.STEP_TOL, show_default=True)
@click.option("--strict", is_flag=True, help="nonzero exit on negative or undecided verdicts")
@click.option("--seed", type=int, default=None, help="report seed (defaults to DIVWITNESS_SEED)")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), default=None,
              help="write per-step diagnostics figure (PNG)")
def divide(input_file, route, tol, strict, seed, out, plot_path):
    """Per-step propagator certificates and the overall divisibility verdict."""
    seed = _seed_option(seed)
    try:
        mapping = _load_mapping(input_file)
    except (ser.ParseError, DivwitnessError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    try:
        report = divisibility.check_divisible(mapping, route=route, tol=tol)
    except NumericalFailureError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    payload = {
        "mapping_digest": ser.digest(ser.mapping_to_json(mapping)),
        "verdict": report.verdict,
        "per_step": [ser.certificate_to_json(c) for c in report.steps],
        "witnesses": [],
        "guessing_traces": [],
        "tool_version": __version__,
        "seed": seed,
        "tolerances": {"step_tol": tol},
    }
    _emit(ser.dumps(payload), out)
    if plot_path:
        plotting.plot_step_diagnostics(
            [c.negativity for c in report.steps],
            [c.residual for c in report.steps],
            plot_path,
            title=f"verdict: {report.verdict}",
        )
    if strict and report.verdict != "divisible":
        sys.exit(EXIT_NEGATIVE)
    sys.exit(EXIT_OK)


@main.command()
@click.argument("input_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--step", type=int, required=True, help="transition index (N^{step-1} -> N^step)")
@click.option("--mode", type=click.Choice(["entangled", "separable"]), default="entangled")
@click.option("--budget", type=int, default=300, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--trace-csv", type=click.Path(dir_okay=False), default=None,
              help="write the witness ensemble's guessing trace as CSV")
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), default=None,
              help="write the guessing trace figure (PNG)")
def witness(input_file, step, mode, budget, seed, out, trace_csv, plot_path):
    """Search for an ensemble with strictly increasing guessing probability."""
    seed = _seed_option(seed)
    try:
        mapping = _load_mapping(input_file)
    except (ser.ParseError, DivwitnessError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    try:
        found = divisibility.witness_search(mapping, step, mode=mode, budget=budget, seed=seed)
    except NumericalFailureError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except DivwitnessError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    if found is None:
        _emit(ser.dumps({"witness": None, "step": step, "mode": mode, "seed": seed}), out)
        sys.exit(EXIT_NEGATIVE)
    payload = {
        "mapping_digest": ser.digest(ser.mapping_to_json(mapping)),
        "witness": ser.witness_to_json(found),
        "tool_version": __version__,
        "seed": seed,
        "tolerances": {"delta_min": divisibility.WITNESS_DELTA_MIN},
    }
    _emit(ser.dumps(payload), out)
    if trace_csv or plot_path:
        trace = discrimination.guessing_trace(mapping, found.ensemble, extended=True)
        if trace_csv:
            _write_trace_csv(trace_csv, trace.values)
        if plot_path:
            plotting.plot_guessing_trace(
                trace.values, plot_path, extended=True,
                title=f"backflow at step {step} (delta={found.delta:.4f})",
            )
    sys.exit(EXIT_OK)


@main.command("pguess")
@click.argument("ensemble_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--mapping", "mapping_file", type=click.Path(exists=True, dir_okay=False),
              default=None, help="evolve the ensemble along this mapping")
@click.option("--extended", is_flag=True, help="states live on ancilla (x) system")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), default=None)
def pguess_cmd(ensemble_file, mapping_file, extended, out, csv_path, plot_path):
    """Guessing probability of an ensemble, optionally along a mapping."""
    try:
        ensemble = ser.ensemble_from_json(ser.load_file(ensemble_file))
        mapping = _load_mapping(mapping_file) if mapping_file else None
    except (ser.ParseError, DivwitnessError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    try:
        if mapping is None:
            values = [discrimination.pguess(ensemble)]
        else:
            values = discrimination.guessing_trace(mapping, ensemble, extended=extended).values
    except NumericalFailureError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except DivwitnessError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    payload = {
        "values": [float(v) for v in values],
        "extended": bool(extended),
        "tolerances": {"sdp_tol": 1e-7},
    }
    _emit(ser.dumps(payload), out)
    if csv_path:
        _write_trace_csv(csv_path, values)
    if plot_path:
        plotting.plot_guessing_trace(values, plot_path, extended=extended)
    sys.exit(EXIT_OK)


FAMILIES = ("dephasing", "amplitude_damping", "bsc", "random_divisible", "collision")


def _build_family(descriptor):
    family = descriptor.get("family")
    params = descriptor.get("params", [])
    seed = int(descriptor.get("seed", 0))
    if family == "dephasing":
        return families.dephasing_family(params)
    if family == "amplitude_damping":
        return families.amplitude_damping_family(params)
    if family == "bsc":
        _, mapping = families.classical_chain(params)
        return mapping
    if family == "random_divisible":
        d, steps = int(params[0]), int(params[1])
        return families.random_divisible(d, steps, seed=seed)
    if family == "collision":
        d = int(descriptor.get("system_dim", 2))
        memory = bool(descriptor.get("memory", False))
        unitaries = [families.partial_swap_unitary(d, float(a)) for a in params]
        env = np.zeros((d, d), dtype=complex)
        env[0, 0] = 1.0
        model = families.CollisionModel(d, d, env, unitaries)
        return families.collision_mapping(model, len(unitaries), memory=memory)
    raise ser.ParseError(f"unknown family {family!r} (known: {', '.join(FAMILIES)})")


@main.command()
@click.argument("descriptor_file", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--family", type=click.Choice(FAMILIES), default=None)
@click.option("--params", default=None, help="comma-separated family parameters")
@click.option("--seed", type=int, default=None)
@click.option("--memory", is_flag=True, help="collision family: persistent environment unit")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def simulate(descriptor_file, family, params, seed, memory, out):
    """Generate a mapping file from a family descriptor (file or flags)."""
    seed = _seed_option(seed)
    try:
        if descriptor_file:
            descriptor = ser.load_file(descriptor_file)
        elif family:
            descriptor = {
                "family": family,
                "params": [float(x) for x in params.split(",")] if params else [],
                "seed": seed,
                "memory": memory,
            }
        else:
            raise ser.ParseError("provide a descriptor file or --family")
        descriptor.setdefault("seed", seed)
        mapping = _build_family(descriptor)
    except (ser.ParseError, DivwitnessError, ValueError, IndexError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    payload = ser.mapping_to_json(mapping)
    payload["generator"] = {k: descriptor.get(k) for k in ("family", "params", "seed") if k in descriptor}
    _emit(ser.dumps(payload), out)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
