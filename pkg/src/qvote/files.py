"""Config loading, fixture replay and output files (bulletin JSON, stats CSV, plan JSON)."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .engine import (BulletinBoard, ElectionConfig, RunStats, compute_election_vectors,
                     compute_tally, decode_votes)
from .errors import ConfigError
from .quantum_sim import NoiseModel

SCHEMA_VERSION = 1

_POOL_SCHEMA = {
    "type": "object",
    "required": ["n_agents", "n_candidates", "votes"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "n_agents": {"type": "integer"},
        "n_candidates": {"type": "integer"},
        "votes": {"type": "array", "items": {"type": "integer"}},
        "pe_rounds": {"type": "integer"},
        "coin_count": {"type": "integer"},
        "failure_threshold": {"type": "number"},
        "anon_security": {"type": "integer"},
        "seed": {"type": "integer"},
        "subround_retry_cap": {"type": "integer"},
        "threshold_restart_cap": {"type": "integer"},
        "noise": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["ideal", "white"]},
                "weight": {"type": "number"},
            },
        },
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "pools"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "pools": {"type": "array", "minItems": 1, "items": _POOL_SCHEMA},
    },
}

_POOL_FIELDS = ("name", "n_agents", "n_candidates", "votes", "pe_rounds", "coin_count",
                "failure_threshold", "anon_security", "seed", "subround_retry_cap",
                "threshold_restart_cap")


def _validate(doc: dict, schema: dict) -> None:
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc),
                    key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {err.message}")


def config_from_dict(d: dict) -> ElectionConfig:
    kwargs = {k: d[k] for k in _POOL_FIELDS if k in d}
    if "noise" in d:
        kwargs["noise"] = NoiseModel.from_dict(d["noise"])
    return ElectionConfig(**kwargs)


def config_to_dict(cfg: ElectionConfig) -> dict:
    d = {k: getattr(cfg, k) for k in _POOL_FIELDS}
    d["votes"] = list(cfg.votes)
    d["noise"] = cfg.noise.to_dict()
    return d


def parse_config(doc: dict):
    """A single ElectionConfig for one pool, a list for several."""
    _validate(doc, CONFIG_SCHEMA)
    configs = []
    for i, pool in enumerate(doc["pools"]):
        try:
            configs.append(config_from_dict(pool))
        except ConfigError as exc:
            raise ConfigError(f"pools/{i}: {exc}") from exc
    return configs[0] if len(configs) == 1 else configs


def load_config(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc)


def dump_config(configs) -> dict:
    if isinstance(configs, ElectionConfig):
        configs = [configs]
    return {"schema_version": SCHEMA_VERSION, "pools": [config_to_dict(c) for c in configs]}


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------- fixtures

_FIXTURE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "name", "n_candidates", "pools"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "n_candidates": {"type": "integer", "minimum": 2},
        "pools": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "n_agents", "digit_rounds", "pe_rounds", "sub_bulletins"],
                "properties": {
                    "sub_bulletins": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["k", "p", "rows"],
                            "properties": {
                                "k": {"type": "integer", "minimum": 1},
                                "p": {"type": "integer", "minimum": 1},
                                "rows": {"type": "array", "items": {
                                    "type": "array", "items": {"enum": [0, 1]}}},
                            },
                        },
                    },
                },
            },
        },
    },
}


@dataclass
class PoolReplay:
    name: str
    election_vectors: np.ndarray  # (K, Pi, N) recomputed from the matrices
    final_bits: np.ndarray        # (N, K)
    votes: np.ndarray             # decoded by slot
    counts: np.ndarray
    invalid: int
    published_e_votes: np.ndarray | None
    discrepancies: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "election_vectors": self.election_vectors.tolist(),
            "final_bits": self.final_bits.tolist(),
            "votes": self.votes.tolist(),
            "tally": self.counts.tolist(),
            "invalid": self.invalid,
            "published_e_votes": None if self.published_e_votes is None
            else self.published_e_votes.tolist(),
            "discrepancies": self.discrepancies,
        }


@dataclass
class FixtureReplay:
    name: str
    n_candidates: int
    pools: list
    merged_tally: np.ndarray
    discrepancies: list

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_candidates": self.n_candidates,
            "pools": [p.to_dict() for p in self.pools],
            "merged_tally": self.merged_tally.tolist(),
            "discrepancies": self.discrepancies,
        }


def _board_from_fixture(pool: dict) -> tuple[BulletinBoard, np.ndarray | None]:
    k_rounds, pe, n = pool["digit_rounds"], pool["pe_rounds"], pool["n_agents"]
    bits = np.full((k_rounds, pe, n, n), -1, dtype=np.int8)
    published = np.full((k_rounds, pe, n), -1, dtype=np.int8)
    for sb in pool["sub_bulletins"]:
        k, p = sb["k"] - 1, sb["p"] - 1
        rows = np.asarray(sb["rows"], dtype=np.int8)
        if rows.shape != (n, n) or not (0 <= k < k_rounds and 0 <= p < pe):
            raise ConfigError(f"{pool['name']}: sub-bulletin ({k + 1}, {p + 1}) has bad shape or index")
        bits[k, p] = rows
        if sb.get("published_E") is not None:
            published[k, p] = sb["published_E"]
    if (bits < 0).any():
        raise ConfigError(f"{pool['name']}: bulletin grid is incomplete")
    return BulletinBoard.from_array(bits), (None if (published < 0).any() else published)


def _replay_pool(pool: dict, n_candidates: int) -> PoolReplay:
    board, published_e = _board_from_fixture(pool)
    e, f = compute_election_vectors(board)
    tally = compute_tally(f, n_candidates)
    issues = []
    published_votes = None
    if published_e is not None:
        for k, p, n in zip(*np.nonzero(e != published_e)):
            issues.append({"kind": "election_vector", "pool": pool["name"],
                           "k": int(k) + 1, "p": int(p) + 1, "n": int(n) + 1,
                           "computed": int(e[k, p, n]), "published": int(published_e[k, p, n])})
        published_votes = decode_votes(np.bitwise_xor.reduce(published_e, axis=1).T)
    if pool.get("published_votes") is not None:
        caption = list(pool["published_votes"])
        if caption != tally.election_vector.tolist():
            issues.append({"kind": "votes", "pool": pool["name"],
                           "computed": tally.election_vector.tolist(), "published": caption,
                           "published_e_votes": None if published_votes is None
                           else published_votes.tolist()})
    if pool.get("published_tally") is not None and list(pool["published_tally"]) != tally.counts.tolist():
        issues.append({"kind": "tally", "pool": pool["name"],
                       "computed": tally.counts.tolist(), "published": list(pool["published_tally"])})
    return PoolReplay(pool["name"], e, f, tally.election_vector, tally.counts, tally.invalid,
                      published_votes, issues)


def replay_fixture(path) -> FixtureReplay:
    """Recompute election vectors and tallies from a published bulletin and list every mismatch."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    _validate(doc, _FIXTURE_SCHEMA)
    c = doc["n_candidates"]
    pools = [_replay_pool(p, c) for p in doc["pools"]]
    merged = np.sum([p.counts for p in pools], axis=0)
    issues = [d for p in pools for d in p.discrepancies]
    if doc.get("published_merged_tally") is not None and list(doc["published_merged_tally"]) != merged.tolist():
        issues.append({"kind": "merged_tally", "computed": merged.tolist(),
                       "published": list(doc["published_merged_tally"])})
    return FixtureReplay(doc["name"], c, pools, merged, issues)


# ---------------------------------------------------------------- stats

def event_columns(n_agents: int) -> list[str]:
    return ["pool", "k", "p", "n", "subround_type", "verifier", "verdict"] + [
        f"delta_{j}" for j in range(1, n_agents + 1)]


def summary_columns(n_agents: int) -> list[str]:
    return ["pool", "k", "p", "verifications", "rejections", "threshold_restarts", "aborts",
            "votes", "pooled_delta"] + [f"delta_{j}" for j in range(1, n_agents + 1)]


def emit_stats(stats, out_dir) -> tuple[Path, Path]:
    """Write ``events.csv`` (one row per gate event) and ``summary.csv`` (one row per (pool, k, p))."""
    if isinstance(stats, RunStats):
        stats = [stats]
    n = max((s.n_agents for s in stats), default=0)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    events_path, summary_path = out / "events.csv", out / "summary.csv"
    with events_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(event_columns(n))
        for s in stats:
            for e in s.events:
                w.writerow([e["pool"], e["k"], e["p"], e["n"], e["subround_type"],
                            e["verifier"], e["verdict"]] + [repr(d) for d in e["deltas"]])
    with summary_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(summary_columns(n))
        for s in stats:
            for r in s.summary():
                w.writerow([r["pool"], r["k"], r["p"], r["verifications"], r["rejections"],
                            r["threshold_restarts"], r["aborts"], r["votes"],
                            repr(r["pooled_delta"])] + [repr(d) for d in r["deltas"]])
    return events_path, summary_path
