"""JSON interchange formats.

Complex numbers serialize as [re, im] pairs and matrices are row-major
nested lists; this single convention is shared by every command and file so
reports are byte-for-byte reproducible.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .channels import QuantumChannel
from .discrimination import Ensemble, GuessingTrace
from .divisibility import (
    ClassicalCertificate,
    DivisibilityReport,
    DynamicalMapping,
    PropagatorCertificate,
    WitnessReport,
)
from .errors import DivwitnessError


class ParseError(DivwitnessError):
    """Input file malformed (carries a field path diagnostic)."""


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def matrix_from_json(obj, where: str = "matrix") -> np.ndarray:
    try:
        rows = [[complex(v[0], v[1]) for v in row] for row in obj]
    except (TypeError, IndexError, ValueError) as exc:
        raise ParseError(f"{where}: expected nested [re, im] pairs ({exc})")
    m = np.array(rows, dtype=complex)
    if m.ndim != 2:
        raise ParseError(f"{where}: not a matrix")
    return m


def channel_to_json(n: QuantumChannel) -> dict:
    return {"dim_in": n.dim_in, "dim_out": n.dim_out, "choi": matrix_to_json(n.choi)}


def channel_from_json(obj, where: str = "channel") -> QuantumChannel:
    try:
        dim_in, dim_out = int(obj["dim_in"]), int(obj["dim_out"])
        choi = matrix_from_json(obj["choi"], where=f"{where}.choi")
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{where}: missing field {exc}")
    try:
        return QuantumChannel(dim_in, dim_out, choi)
    except DivwitnessError as exc:
        raise ParseError(f"{where}: {exc}")


def mapping_to_json(m: DynamicalMapping) -> dict:
    return {
        "system_dim": m.system_dim,
        "channels": [channel_to_json(n) for n in m.channels],
    }


def mapping_from_json(obj) -> DynamicalMapping:
    try:
        dim = int(obj["system_dim"])
        chans = [
            channel_from_json(c, where=f"channels[{k}]")
            for k, c in enumerate(obj["channels"])
        ]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"mapping: missing field {exc}")
    return DynamicalMapping(dim, chans)


def ensemble_to_json(e: Ensemble) -> dict:
    return {
        "states": [
            {"prob": float(p), "rho": matrix_to_json(s)}
            for p, s in zip(e.probs, e.states)
        ]
    }


def ensemble_from_json(obj) -> Ensemble:
    try:
        entries = obj["states"]
        probs = [float(s["prob"]) for s in entries]
        states = [matrix_from_json(s["rho"], where=f"states[{k}].rho")
                  for k, s in enumerate(entries)]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"ensemble: missing field {exc}")
    return Ensemble(np.array(probs), states)


def certificate_to_json(c: PropagatorCertificate) -> dict:
    out = {
        "status": c.status,
        "route": c.route,
        "residual": float(c.residual),
        "negativity": None if c.negativity is None else float(c.negativity),
        "propagator": None if c.propagator is None else channel_to_json(c.propagator),
    }
    return out


def divisibility_report_to_json(r: DivisibilityReport) -> dict:
    return {"verdict": r.verdict, "steps": [certificate_to_json(c) for c in r.steps]}


def classical_certificate_to_json(c: ClassicalCertificate) -> dict:
    return {
        "status": c.status,
        "residual": float(c.residual),
        "transition": None if c.transition is None else [[float(v) for v in row] for row in c.transition],
        "farkas": None if c.farkas is None else [float(v) for v in c.farkas],
    }


def witness_to_json(w: WitnessReport) -> dict:
    return {
        "step": w.step,
        "mode": w.mode,
        "pguess_before": float(w.pguess_before),
        "pguess_after": float(w.pguess_after),
        "delta": float(w.delta),
        "ensemble": ensemble_to_json(w.ensemble),
    }


def trace_to_json(t: GuessingTrace) -> dict:
    return {
        "values": [float(v) for v in t.values],
        "extended": bool(t.extended),
        "ensemble": ensemble_to_json(t.ensemble),
    }


def dumps(obj) -> str:
    """Canonical JSON text: sorted keys, stable separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=2) + "\n"


def digest(obj) -> str:
    """Content hash of the canonical JSON form."""
    return hashlib.sha256(dumps(obj).encode("utf-8")).hexdigest()


def load_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}")
