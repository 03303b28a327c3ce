"""JSON spec files for channels, states, ensembles and pmfs, and run manifests.

Complex matrices are nested lists whose leaves are ``[re, im]`` pairs.  A spec
document is an object with a ``version`` tag and any of the blocks below::

    {"version": "privmac-spec/1", "note": "...",
     "channel": {"users": 2, "input_dims": [2, 2], "output_dim": 4, "env_dim": 4, "kraus": [M, ...]},
     "cq_channel": {"users": 1, "alphabet_sizes": [2], "dims": [2, 2], "states": [M, ...]},
     "ensemble": {"pmfs": [[...], ...], "states": [[M, ...], ...]},
     "rates": [[R_U, R_DC], ...],
     "states": {"name": {"dims": [2, 2], "matrix": M}},
     "cq_states": {"name": {"weights": [...], "shape": [...], "qdims": [...], "states": [M, ...]}},
     "pmf": {"shape": [2, 2], "values": [...]}}

``users`` and ``env_dim`` are optional and checked against the other fields.
``cq_channel`` states are listed per joint symbol in row-major order; an
``ensemble`` without ``states`` means computational-basis signals.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .codesim import CqMacWiretapChannel
from .errors import PrivmacError, SpecFormatError
from .optimize import InputEnsemble, classical_ensemble
from .qstate import CqState, DensityOperator, QuantumChannel

SPEC_VERSION = "privmac-spec/1"


def encode_matrix(m) -> list:
    a = np.asarray(m, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_matrix(obj, where: str) -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SpecFormatError(f"{where}: matrix entries must be numbers") from exc
    if a.ndim < 1 or a.shape[-1] != 2:
        raise SpecFormatError(f"{where}: matrix entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


@dataclass(frozen=True, eq=False)
class Spec:
    note: str = ""
    channel: QuantumChannel | None = None
    env_dim: int | None = None
    cq_channel: CqMacWiretapChannel | None = None
    ensemble: InputEnsemble | None = None
    rates: tuple | None = None
    states: dict = field(default_factory=dict)
    cq_states: dict = field(default_factory=dict)
    pmf: np.ndarray | None = None

    @property
    def pmfs(self) -> tuple | None:
        return None if self.ensemble is None else self.ensemble.pmfs


def _check_users(block: dict, where: str, count: int) -> None:
    if "users" in block and block["users"] != count:
        raise SpecFormatError(f"{where}.users: {block['users']!r} does not match {count} declared dimensions")


def _wrap(where: str, fn):
    try:
        return fn()
    except SpecFormatError:
        raise
    except (PrivmacError, ValueError, TypeError, KeyError) as exc:
        raise SpecFormatError(f"{where}: {exc}") from exc


def parse_spec(text: str) -> Spec:
    """Parse and validate a spec document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise SpecFormatError("spec must be a JSON object")
    if doc.get("version") != SPEC_VERSION:
        raise SpecFormatError(f"version: expected {SPEC_VERSION!r}, got {doc.get('version')!r}")
    out = {"note": str(doc.get("note", ""))}
    if "channel" in doc:
        c = doc["channel"]

        def load_channel():
            kraus = decode_matrix(c["kraus"], "channel.kraus")
            return QuantumChannel(tuple(c["input_dims"]), int(c["output_dim"]), kraus)

        out["channel"] = _wrap("channel", load_channel)
        _check_users(c, "channel", out["channel"].num_users)
        if c.get("env_dim") is not None:
            out["env_dim"] = int(c["env_dim"])
            if out["env_dim"] != out["channel"].kraus.shape[0]:
                raise SpecFormatError("channel.env_dim: does not match the number of Kraus operators")
    if "cq_channel" in doc:
        c = doc["cq_channel"]

        def load_cq():
            sizes = tuple(int(k) for k in c["alphabet_sizes"])
            states = decode_matrix(c["states"], "cq_channel.states")
            d = states.shape[-1]
            return CqMacWiretapChannel(states.reshape(sizes + (d, d)), tuple(c["dims"]))

        out["cq_channel"] = _wrap("cq_channel", load_cq)
        _check_users(c, "cq_channel", out["cq_channel"].num_users)
    if "ensemble" in doc:
        e = doc["ensemble"]

        def load_ensemble():
            pmfs = tuple(np.asarray(p, dtype=np.float64) for p in e["pmfs"])
            if e.get("states") is None:
                return classical_ensemble(pmfs)
            states = tuple(decode_matrix(s, f"ensemble.states[{i}]") for i, s in enumerate(e["states"]))
            return InputEnsemble(pmfs, states)

        out["ensemble"] = _wrap("ensemble", load_ensemble)
    if "rates" in doc:
        out["rates"] = _wrap("rates", lambda: tuple((float(a), float(b)) for a, b in doc["rates"]))
    if "states" in doc:
        states = {}
        for name, s in doc["states"].items():
            def load_state(s=s, name=name):
                m = decode_matrix(s["matrix"], f"states.{name}.matrix")
                DensityOperator(m)
                dims = tuple(int(d) for d in s.get("dims", [m.shape[0]]))
                if int(np.prod(dims)) != m.shape[0]:
                    raise SpecFormatError(f"states.{name}.dims: do not multiply to {m.shape[0]}")
                return m, dims

            states[name] = _wrap(f"states.{name}", load_state)
        out["states"] = states
    if "cq_states" in doc:
        cqs = {}
        for name, s in doc["cq_states"].items():
            def load_cq_state(s=s, name=name):
                shape = tuple(int(k) for k in s["shape"])
                w = np.asarray(s["weights"], dtype=np.float64).reshape(shape)
                m = decode_matrix(s["states"], f"cq_states.{name}.states")
                d = m.shape[-1]
                qdims = tuple(s["qdims"]) if s.get("qdims") else None
                return CqState(w, m.reshape(shape + (d, d)), qdims)

            cqs[name] = _wrap(f"cq_states.{name}", load_cq_state)
        out["cq_states"] = cqs
    if "pmf" in doc:
        def load_pmf():
            p = np.asarray(doc["pmf"]["values"], dtype=np.float64).reshape(tuple(doc["pmf"]["shape"]))
            if np.any(p < 0) or abs(p.sum() - 1) > 1e-10:
                raise SpecFormatError("pmf: entries must be nonnegative and sum to 1")
            return p

        out["pmf"] = _wrap("pmf", load_pmf)
    return Spec(**out)


def serialize_spec(spec: Spec) -> str:
    """Canonical JSON text of a spec (sorted keys, two-space indent)."""
    doc = {"version": SPEC_VERSION}
    if spec.note:
        doc["note"] = spec.note
    if spec.channel is not None:
        ch = spec.channel
        doc["channel"] = {"users": ch.num_users, "input_dims": list(ch.in_dims), "output_dim": ch.out_dim,
                          "kraus": encode_matrix(ch.kraus)}
        if spec.env_dim is not None:
            doc["channel"]["env_dim"] = spec.env_dim
    if spec.cq_channel is not None:
        cq = spec.cq_channel
        d = cq.states.shape[-1]
        doc["cq_channel"] = {"users": cq.num_users, "alphabet_sizes": list(cq.alphabet_sizes), "dims": list(cq.dims),
                             "states": encode_matrix(cq.states.reshape(-1, d, d))}
    if spec.ensemble is not None:
        doc["ensemble"] = {"pmfs": [p.tolist() for p in spec.ensemble.pmfs],
                           "states": [encode_matrix(s) for s in spec.ensemble.states]}
    if spec.rates is not None:
        doc["rates"] = [list(r) for r in spec.rates]
    if spec.states:
        doc["states"] = {k: {"dims": list(dims), "matrix": encode_matrix(m)} for k, (m, dims) in spec.states.items()}
    if spec.cq_states:
        doc["cq_states"] = {}
        for k, s in spec.cq_states.items():
            d = s.qdim
            doc["cq_states"][k] = {"shape": list(s.weights.shape), "weights": s.weights.ravel().tolist(),
                                   "qdims": list(s.qdims), "states": encode_matrix(s.cond_states.reshape(-1, d, d))}
    if spec.pmf is not None:
        doc["pmf"] = {"shape": list(spec.pmf.shape), "values": spec.pmf.ravel().tolist()}
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def load_spec(path) -> Spec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecFormatError(f"{path}: {exc.strerror}") from exc
    try:
        return parse_spec(text)
    except SpecFormatError as exc:
        raise SpecFormatError(f"{path}: {exc}") from exc


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    subcommand: str
    seed: int | None
    tolerances: dict
    inputs: dict
    version: str = __version__

    def as_dict(self) -> dict:
        return {"subcommand": self.subcommand, "seed": self.seed, "tolerances": dict(self.tolerances),
                "inputs": dict(self.inputs), "version": self.version}


def manifest_for(subcommand: str, seed, tolerances: dict, paths=()) -> RunManifest:
    """Manifest with the sha256 digest of every input file (keyed by file name)."""
    return RunManifest(subcommand, seed, tolerances, {Path(p).name: file_digest(p) for p in paths})


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if v != v or v in (float("inf"), float("-inf")):
            return repr(v)
        return v
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def render_records(manifest: RunManifest, result) -> str:
    return json.dumps({"manifest": manifest.as_dict(), "result": _plain(result)}, sort_keys=True, indent=2) + "\n"


def render_csv(manifest: RunManifest, sections: dict) -> str:
    """CSV sections preceded by ``# manifest:`` and ``# section:`` comment lines."""
    lines = ["# manifest: " + json.dumps(manifest.as_dict(), sort_keys=True)]
    for name, text in sections.items():
        lines.append(f"# section: {name}")
        lines.append(text.rstrip("\n"))
    return "\n".join(lines) + "\n"
