"""Consolidated report assembly over pipeline findings documents.

Each analyze pipeline writes a JSON document {"pipeline", "findings",
"tables"}; this module merges any number of them into one markdown
report (plus CSV table dumps) with a fixed section order so repeated
runs produce byte-identical bodies.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

from cct.errors import InputError

PIPELINE_ORDER = ("stats", "xvalidate", "rand", "keys", "timing")

SECTION_TITLES = {
    "stats": "Availability and errors",
    "xvalidate": "Functional cross-validation",
    "rand": "Randomness",
    "keys": "Key cryptanalysis",
    "timing": "Timing side channels",
}


def findings_doc(pipeline: str, findings: Sequence[dict],
                 tables: dict | None = None) -> dict:
    if pipeline not in PIPELINE_ORDER:
        raise InputError(f"unknown pipeline {pipeline!r}")
    return {"pipeline": pipeline, "findings": list(findings),
            "tables": tables or {}}


def dump_doc(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_docs(paths: Iterable) -> list[dict]:
    """Parses findings documents, dropping byte-identical duplicates."""
    seen: set[str] = set()
    docs = []
    for path in paths:
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read findings file {path}: {exc}") from exc
        digest = hashlib.sha256(raw).hexdigest()
        if digest in seen:
            continue
        seen.add(digest)
        try:
            obj = json.loads(raw)
        except ValueError as exc:
            raise InputError(f"bad findings file {path}: {exc}") from exc
        for doc in obj.get("pipelines", [obj]):
            if "pipeline" not in doc or "findings" not in doc:
                raise InputError(f"findings file {path} missing fields")
            docs.append(doc)
    return docs


def _markdown_table(rows: Sequence[dict]) -> list[str]:
    if not rows:
        return ["(empty)", ""]
    cols = list(rows[0].keys())
    out = ["| " + " | ".join(cols) + " |",
           "| " + " | ".join("---" for _ in cols) + " |"]
    for row in rows:
        out.append("| " + " | ".join(str(row.get(c, "")) for c in cols) + " |")
    out.append("")
    return out


def _csv_table(rows: Sequence[dict]) -> str:
    import csv
    import io
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def render_report(docs: Sequence[dict]) -> str:
    """Markdown body: one section per pipeline in fixed order. Findings
    counts match the input documents exactly; sections without input
    report all-clear."""
    by_pipeline: dict[str, list[dict]] = {}
    for doc in docs:
        by_pipeline.setdefault(doc["pipeline"], []).append(doc)
    lines = ["# Compliance report", ""]
    total = 0
    for pipeline in PIPELINE_ORDER:
        lines.append(f"## {SECTION_TITLES[pipeline]}")
        lines.append("")
        pdocs = by_pipeline.get(pipeline, [])
        if not pdocs:
            lines.extend(["No data analyzed.", ""])
            continue
        findings = [f for doc in pdocs for f in doc["findings"]]
        total += len(findings)
        if findings:
            lines.append(f"{len(findings)} finding(s).")
            lines.append("")
            rows = [{"kind": f["kind"],
                     "group": json.dumps(f["group"], sort_keys=True),
                     "evidence": json.dumps(f["evidence"], sort_keys=True)}
                    for f in findings]
            rows.sort(key=lambda r: (r["kind"], r["group"]))
            lines.extend(_markdown_table(rows))
        else:
            lines.extend(["All clear.", ""])
        for doc in pdocs:
            for name in sorted(doc.get("tables", {})):
                lines.append(f"### {name}")
                lines.append("")
                lines.extend(_markdown_table(doc["tables"][name]))
    lines.append(f"Total findings: {total}")
    lines.append("")
    return "\n".join(lines)


def write_report(docs: Sequence[dict], out_path) -> int:
    """Writes markdown plus one CSV per table; returns finding count."""
    out = Path(out_path)
    out.write_text(render_report(docs), encoding="utf-8")
    for doc in docs:
        for name in sorted(doc.get("tables", {})):
            csv_text = _csv_table(doc["tables"][name])
            out.with_name(f"{out.stem}.{doc['pipeline']}.{name}.csv").write_text(
                csv_text, encoding="utf-8")
    return sum(len(doc["findings"]) for doc in docs)
