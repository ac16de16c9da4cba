"""File formats: strategies, correlation records, certification reports.

Everything is JSON with an explicit ``schema_version``.  Complex entries are
stored as ``[re, im]`` pairs in row-major order; Python's float repr round
trips through JSON bit-exactly, so numeric payloads survive
serialize/deserialize unchanged.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .certify import CertificationReport, CheckResult
from .quantum import DichotomicObservable, Interaction, QuantumState
from .scenario import CorrelationRecord, Strategy

__all__ = [
    "SCHEMA_VERSION",
    "SerializationError",
    "matrix_payload",
    "matrix_from_payload",
    "strategy_to_dict",
    "strategy_from_dict",
    "save_strategy",
    "load_strategy",
    "record_to_dict",
    "save_record",
    "report_to_dict",
    "save_report",
    "file_digest",
]

SCHEMA_VERSION = "1"


class SerializationError(ValueError):
    """Malformed or inconsistent file content; the message names the field."""


def matrix_payload(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def matrix_from_payload(obj, path: str) -> np.ndarray:
    try:
        rows, cols = int(obj["rows"]), int(obj["cols"])
        entries = obj["entries"]
    except (KeyError, TypeError) as exc:
        raise SerializationError(f"{path}: missing rows/cols/entries") from exc
    if len(entries) != rows * cols:
        raise SerializationError(
            f"{path}.entries: expected {rows * cols} [re, im] pairs, got {len(entries)}"
        )
    try:
        flat = np.array([complex(re, im) for re, im in entries], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise SerializationError(f"{path}.entries: entries must be [re, im] pairs") from exc
    return flat.reshape(rows, cols)


def _bits(t) -> str:
    return "".join(str(int(b)) for b in t)


def strategy_to_dict(strategy: Strategy, meta: dict | None = None) -> dict:
    matrices = [{"role": "source_state", **matrix_payload(strategy.source_state.density)}]
    for time_slice, obs in ((1, strategy.observables_t1), (2, strategy.observables_t2)):
        for party, pair in enumerate(obs):
            for setting, o in enumerate(pair):
                matrices.append(
                    {
                        "role": "observable",
                        "party": party,
                        "setting": setting,
                        "time_slice": time_slice,
                        **matrix_payload(o.matrix),
                    }
                )
    matrices.append({"role": "interaction", **matrix_payload(strategy.interaction.matrix)})
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "strategy",
        "parties": strategy.parties,
        "dims": {
            "t1": list(strategy.source_state.dims),
            "t2": list(strategy.interaction.dims_out),
        },
        "matrices": matrices,
        "meta": meta or {},
    }


def strategy_from_dict(data: dict) -> Strategy:
    if not isinstance(data, dict):
        raise SerializationError("top level: expected a JSON object")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SerializationError(
            f"schema_version: expected {SCHEMA_VERSION!r}, got {data.get('schema_version')!r}"
        )
    if data.get("kind") != "strategy":
        raise SerializationError(f"kind: expected 'strategy', got {data.get('kind')!r}")
    try:
        parties = int(data["parties"])
        dims_t1 = tuple(int(d) for d in data["dims"]["t1"])
        dims_t2 = tuple(int(d) for d in data["dims"]["t2"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"parties/dims: {exc}") from exc
    if len(dims_t1) != parties or len(dims_t2) != parties:
        raise SerializationError("dims: need one dimension per party and round")

    source = None
    interaction = None
    observables: dict[tuple[int, int, int], np.ndarray] = {}
    for i, entry in enumerate(data.get("matrices", [])):
        path = f"matrices[{i}]"
        role = entry.get("role")
        if role == "source_state":
            source = matrix_from_payload(entry, path)
        elif role == "interaction":
            interaction = matrix_from_payload(entry, path)
        elif role == "observable":
            try:
                key = (int(entry["party"]), int(entry["setting"]), int(entry["time_slice"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise SerializationError(f"{path}: observable needs party/setting/time_slice") from exc
            observables[key] = matrix_from_payload(entry, path)
        else:
            raise SerializationError(f"{path}.role: unknown role {role!r}")
    if source is None:
        raise SerializationError("matrices: no source_state entry")
    if interaction is None:
        raise SerializationError("matrices: no interaction entry")

    def pairs(time_slice):
        out = []
        for party in range(parties):
            pair = []
            for setting in (0, 1):
                key = (party, setting, time_slice)
                if key not in observables:
                    raise SerializationError(
                        f"matrices: missing observable party={party} setting={setting} "
                        f"time_slice={time_slice}"
                    )
                pair.append(
                    DichotomicObservable(
                        observables[key], party=party, setting=setting, time_slice=time_slice
                    )
                )
            out.append(tuple(pair))
        return tuple(out)

    try:
        return Strategy(
            source_state=QuantumState(source, dims_t1),
            observables_t1=pairs(1),
            observables_t2=pairs(2),
            interaction=Interaction(interaction, dims_t1, dims_t2),
        )
    except ValueError as exc:
        raise SerializationError(f"strategy validation: {exc}") from exc


def save_strategy(strategy: Strategy, path, meta: dict | None = None) -> dict:
    data = strategy_to_dict(strategy, meta)
    Path(path).write_text(json.dumps(data, indent=1))
    return data


def load_strategy(path) -> Strategy:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SerializationError(f"{p}: {exc}") from exc
    return strategy_from_dict(data)


def record_to_dict(record: CorrelationRecord) -> dict:
    def event_key(event):
        x, a = event
        return f"x={_bits(x)}|a={_bits(a)}"

    extra = None
    if record.extra_stats is not None:
        extra = {
            "passes": record.extra_stats.passes,
            "entries": [[label, value, target] for label, value, target in record.extra_stats.entries],
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "correlation_record",
        "parties": record.parties,
        "t1_bell_value": record.t1_bell_value,
        "t2_bell_values": {_bits(a): v for a, v in record.t2_bell_values.items()},
        "extra_stats": extra,
        "p1": {_bits(x): [float(p) for p in probs.reshape(-1)] for x, probs in record.p1.items()},
        "p2": {
            event_key(event): {
                _bits(x2): [float(p) for p in probs.reshape(-1)] for x2, probs in settings.items()
            }
            for event, settings in record.p2.items()
        },
        "event_probabilities": {
            event_key(event): float(p) for event, p in record.event_probabilities.items()
        },
    }


def save_record(record: CorrelationRecord, path) -> dict:
    data = record_to_dict(record)
    Path(path).write_text(json.dumps(data, indent=1))
    return data


def _check_dict(c: CheckResult) -> dict:
    return {"name": c.name, "value": c.value, "tolerance": c.tolerance, "passed": c.passed}


def report_to_dict(report: CertificationReport, provenance: dict | None = None) -> dict:
    inter = None
    if report.interaction is not None:
        ic = report.interaction
        inter = {
            "is_product": ic.is_product,
            "residual": ic.residual,
            "proportionality_error": ic.proportionality_error,
            "unitarity_defect": ic.unitarity_defect,
            "schmidt_coefficients": [float(s) for s in ic.schmidt_coefficients],
            "aux_unitary": None if ic.aux_unitary is None else matrix_payload(ic.aux_unitary),
            "failures": list(ic.failures),
            "tolerances": {
                "proportionality": report.tolerances.get("proportionality"),
                "certification": report.tolerances.get("certification"),
            },
        }
    state = None
    if report.state is not None:
        state = {
            "residual": report.state.residual,
            "aux_dims": list(report.state.aux_dims),
            "min_eigenvalue": report.state.min_eigenvalue,
            "trace": report.state.trace,
            "aux_state": matrix_payload(report.state.aux_state),
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "certification_report",
        "verdict": report.verdict,
        "parties": report.parties,
        "tolerances": dict(report.tolerances),
        "checks": {
            "bell": [_check_dict(c) for c in report.bell_checks],
            "extra_statistics": [_check_dict(c) for c in report.extra_stat_checks],
            "projectivity": [_check_dict(c) for c in report.projectivity_checks],
            "anticommutation": [_check_dict(c) for c in report.anticommutation_checks],
            "frame": [_check_dict(c) for c in report.frame_checks],
        },
        "state": state,
        "state_residual": None if report.state_residual is None else _check_dict(report.state_residual),
        "xi_min_eigenvalue": report.xi_min_eigenvalue,
        "interaction": inter,
        "frames": [
            {
                "party": f.party,
                "time_slice": f.time_slice,
                "aux_dim": f.aux_dim,
                "support_dim": f.support_dim,
                "matrix": matrix_payload(f.matrix),
            }
            for f in report.frames
        ],
        "failures": list(report.failures),
        "provenance": provenance or {},
    }


def save_report(report: CertificationReport, path, provenance: dict | None = None) -> dict:
    data = report_to_dict(report, provenance)
    Path(path).write_text(json.dumps(data, indent=1))
    return data


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
