"""Structured run reports, their determinism hash and CSV exports."""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
from pathlib import Path
from typing import Optional

from . import __version__
from .decomp import QUANTITIES, Aggregate
from .search import MAX, MIN

COMPONENTS = ("unique", "redundant", "synergistic")


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def determinism_hash(report: dict) -> str:
    """sha256 of everything except the volatile ``metadata.run`` block and the hash itself."""
    body = {k: v for k, v in report.items() if k != "determinism_hash"}
    meta = dict(body.get("metadata", {}))
    meta.pop("run", None)
    body["metadata"] = meta
    return hashlib.sha256(_canonical(body).encode("utf-8")).hexdigest()


def build_report(command: str, config, feature_names, *, results=None, aggregate=None,
                 repeats=None, oracle=None, extra: Optional[dict] = None,
                 argv=None, threads: int = 1) -> dict:
    """Assemble a report document.

    ``results``: per-feature DecompositionResult list (single analysis).
    ``repeats``: list of per-repeat result lists (batch/bootstrap); stored
    without search traces. ``oracle``: per-feature oracle results.
    """
    names = list(feature_names)
    meta = {
        "tool": "infodecomp",
        "version": __version__,
        "command": command,
        "config": config.to_dict(),
        "seed": config.seed,
        "feature_names": names,
        "run": {
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "argv": list(argv) if argv is not None else None,
            "threads": threads,
        },
    }
    if extra:
        meta.update(extra)
    report = {"metadata": meta}
    report["features"] = [r.to_dict(names) for r in results] if results is not None else None
    if repeats is not None:
        report["repeats"] = [
            [_compact(r, names) for r in run] for run in repeats
        ]
    report["aggregate"] = aggregate.to_dict() if aggregate is not None else None
    if oracle is not None:
        report["oracle"] = [_oracle_entry(r, names) for r in oracle]
    else:
        report["oracle"] = None
    report["determinism_hash"] = determinism_hash(report)
    return report


def _compact(r, names) -> dict:
    out = {"source": names[r.source_index], "mi_significant": r.mi_significant}
    for q in QUANTITIES:
        out[q] = getattr(r, q)
    out["zmin"] = [names[j] for j in r.zmin]
    out["zmax"] = [names[j] for j in r.zmax]
    return out


def _oracle_entry(r, names) -> dict:
    out = _compact(r, names)
    out["trace_min"] = r.trace_min.to_dict()
    out["trace_max"] = r.trace_max.to_dict()
    return out


def write_report(report: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")
    return path


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(f"{path.stem}_{suffix}.csv")


def _write_rows(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else v


def feature_table(report: dict):
    """(header, rows) of per-feature values: aggregate means/SDs if present, else the single run."""
    agg = report.get("aggregate")
    oracle = {o["source"]: o for o in (report.get("oracle") or [])}
    if agg:
        header = ["feature", "mi_significant_pct"]
        for q in QUANTITIES:
            header += [f"{q}_mean", f"{q}_sd"]
        header += [f"oracle_{c}" for c in COMPONENTS] if oracle else []
        rows = []
        for f in agg["features"]:
            row = [f["feature"], _fmt(f["mi_significant_pct"])]
            for q in QUANTITIES:
                row += [_fmt(f[f"{q}_mean"]), _fmt(f[f"{q}_sd"])]
            if oracle:
                row += [_fmt(oracle[f["feature"]][c]) for c in COMPONENTS]
            rows.append(row)
        return header, rows
    header = ["feature", "mi_significant"] + list(QUANTITIES) + ["zmin", "zmax"]
    header += [f"oracle_{c}" for c in COMPONENTS] if oracle else []
    rows = []
    for f in report.get("features") or []:
        row = [f["source"], f["mi_significant"]] + [_fmt(f[q]) for q in QUANTITIES]
        row += [" ".join(f["zmin"]), " ".join(f["zmax"])]
        if oracle:
            row += [_fmt(oracle[f["source"]][c]) for c in COMPONENTS]
        rows.append(row)
    return header, rows


def export_csv(report: dict, report_path) -> list:
    """Write the delimited tables next to ``report_path``; returns the written paths."""
    path = Path(report_path)
    written = [_write_rows(_sibling(path, "features"), *feature_table(report))]
    agg = report.get("aggregate")
    oracle = {o["source"]: o for o in (report.get("oracle") or [])}
    if agg:
        rows = []
        for d in (MIN, MAX):
            for src, cells in agg["selection"][d].items():
                chosen = set(oracle[src]["z" + d]) if oracle else set()
                for cond, pct in cells.items():
                    if cond == src:
                        continue
                    rows.append([d, src, cond, _fmt(pct), int(cond in chosen) if oracle else ""])
        written.append(_write_rows(
            _sibling(path, "selection"),
            ["direction", "source", "conditioning", "selected_pct", "oracle_selected"], rows))
        rows = []
        for d in (MIN, MAX):
            for src, its in agg["order"][d].items():
                for it in its:
                    for cond, pct in it["selected_pct"].items():
                        if cond == src:
                            continue
                        rows.append([d, src, it["iteration"], cond, _fmt(pct),
                                     _fmt(it["reach_pct"])])
        written.append(_write_rows(
            _sibling(path, "order"),
            ["direction", "source", "iteration", "conditioning", "selected_pct", "reach_pct"],
            rows))
    if report.get("repeats"):
        rows = []
        for i, run in enumerate(report["repeats"]):
            for r in run:
                rows.append([i, r["source"], r["mi_significant"]]
                            + [_fmt(r[q]) for q in QUANTITIES]
                            + [" ".join(r["zmin"]), " ".join(r["zmax"])])
        written.append(_write_rows(
            _sibling(path, "repeats"),
            ["repeat", "feature", "mi_significant"] + list(QUANTITIES) + ["zmin", "zmax"],
            rows))
    return written


def aggregate_from_report(report: dict) -> Optional[Aggregate]:
    return report.get("aggregate")
