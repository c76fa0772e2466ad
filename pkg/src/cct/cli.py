"""Command-line entry point: simulate -> analyze -> report.

Exit codes: 0 success with no findings, 1 findings emitted, 2 usage
error, 3 input error. Every run writes a RunManifest (with timestamps
and input digests) next to its output so the output body itself stays
byte-identical across reruns.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

from cct import fleetstats, keycheck, keys, report, timecheck, xvalidate
from cct.errors import CctError
from cct.fleet import FleetConfig, write_fleet
from cct.randcheck import analyze_dataset_randomness
from cct.records import Op, parse_dataset

TOOL_VERSION = "0.1.0"

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2
EXIT_INPUT = 3


@dataclass
class RunManifest:
    command: str
    config_digest: str
    dataset_digest: str
    tool_version: str
    started: float
    finished: float


def _digest(path) -> str:
    if path is None:
        return ""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_manifest(out_path, command: str, started: float,
                    config_path=None, dataset_path=None) -> None:
    manifest = RunManifest(
        command=command,
        config_digest=_digest(config_path),
        dataset_digest=_digest(dataset_path),
        tool_version=TOOL_VERSION,
        started=started,
        finished=time.time(),
    )
    path = Path(str(out_path) + ".manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_dataset(path):
    try:
        with open(path, "rb") as fh:
            return list(parse_dataset(fh))
    except OSError as exc:
        raise CctError(f"cannot read dataset {path}: {exc}") from exc


def _load_imported(path):
    if path is None:
        return keys.fixed_keys()
    return keys.load_key_file(path)


def _rate_row(label: str, triple: fleetstats.RateTriple) -> dict:
    return {"op": label, "rate_raw": round(triple.rate_raw, 6),
            "group_median": round(triple.group_median, 6),
            "rate_threshold": round(triple.rate_threshold, 6),
            "all_excluded": triple.all_excluded}


def _stats_doc(records, seed: int) -> dict:
    tables: dict[str, list[dict]] = {}
    rate_rows = [_rate_row("all", fleetstats.error_rates(records))]
    for op in Op:
        if any(r.op == op for r in records):
            rate_rows.append(_rate_row(op.value,
                                       fleetstats.error_rates(records, op)))
    tables["error_rates"] = rate_rows
    tables["p90_latency"] = [
        {"suite": s.value, "backing": b.value, "tier": t.value, "p90_ms": v}
        for (s, b, t), v in fleetstats.p90_latency(records, seed=seed).items()]
    profiles = {r.device.device_id: r.device for r in records}
    tables["strongbox_adoption"] = [
        {"release_year": y, "tier": t.value, "fraction": round(f, 6)}
        for (y, t), f in fleetstats.strongbox_adoption(profiles.values()).items()]
    tables["bug_patterns"] = [
        {"pattern": row.pattern, "ops": "/".join(row.ops),
         "backings": "/".join(row.backings),
         "api_levels": "/".join(map(str, row.api_levels)),
         "chipsets": row.chipset_count, "devices": row.device_count,
         "rate_min": round(row.rate_min, 6),
         "rate_max": round(row.rate_max, 6),
         "rate_median": round(row.rate_median, 6)}
        for row in fleetstats.bug_pattern_table(records)]
    findings = [f.to_json() for f in fleetstats.bug_pattern_findings(records)]
    return report.findings_doc("stats", findings, tables)


def _xvalidate_doc(records, imported) -> dict:
    findings = xvalidate.cross_validate(records, imported)
    return report.findings_doc("xvalidate", [f.to_json() for f in findings])


def _rand_doc(records, imported) -> dict:
    findings = analyze_dataset_randomness(records, imported)
    return report.findings_doc("rand", [f.to_json() for f in findings])


def _keys_doc(records, denylist_dir) -> dict:
    rsa_keys, ec_points = keycheck.keys_from_records(records)
    key_findings = keycheck.run_key_battery(rsa_keys, ec_points,
                                           denylist_dir=denylist_dir)
    tables = {"check_counts": [
        {"check": check, "findings": count}
        for check, count in keycheck.check_counts(key_findings).items()]}
    return report.findings_doc(
        "keys", [kf.to_finding().to_json() for kf in key_findings], tables)


def _timing_doc(records, imported, seed: int) -> dict:
    reports = timecheck.analyze_records(records, imported, seed=seed)
    findings = [r.to_finding().to_json() for r in reports
                if r.status == "flagged"]
    device_chipset = {r.device.device_id: r.device.chipset for r in records}
    rollup: dict[str, int] = {}
    for rep in reports:
        if rep.status == "flagged":
            chip = device_chipset.get(rep.device_id, "?")
            rollup[chip] = rollup.get(chip, 0) + 1
    tables = {
        "device_status": [
            {"device_id": r.device_id, "n_samples": r.n_samples,
             "corr": "" if r.corr is None else round(r.corr, 6),
             "simulated_corr": ("" if r.simulated_corr is None
                                else round(r.simulated_corr, 6)),
             "status": r.status}
            for r in reports],
        "flagged_chipsets": [
            {"chipset": chip, "flagged_devices": count}
            for chip, count in sorted(rollup.items())],
    }
    return report.findings_doc("timing", findings, tables)


def _analyze(args) -> int:
    records = _read_dataset(args.dataset)
    imported = _load_imported(args.keys)
    seed = args.seed or 0
    pipelines = (list(report.PIPELINE_ORDER) if args.pipeline == "all"
                 else [args.pipeline])
    docs = []
    for pipeline in pipelines:
        if pipeline == "stats":
            docs.append(_stats_doc(records, seed))
        elif pipeline == "xvalidate":
            docs.append(_xvalidate_doc(records, imported))
        elif pipeline == "rand":
            docs.append(_rand_doc(records, imported))
        elif pipeline == "keys":
            docs.append(_keys_doc(records, args.denylists))
        elif pipeline == "timing":
            docs.append(_timing_doc(records, imported, seed))
    out_doc = docs[0] if len(docs) == 1 else {"pipelines": docs}
    if args.out:
        report.dump_doc(out_doc, args.out)
        _write_manifest(args.out, "analyze " + args.pipeline, args.started,
                        dataset_path=args.dataset)
    n_findings = sum(len(d["findings"]) for d in docs)
    return EXIT_FINDINGS if n_findings else EXIT_OK


def _simulate(args) -> int:
    config = FleetConfig.load(args.config)
    if args.seed is not None:
        config = FleetConfig(seed=args.seed, models=config.models,
                             days=config.days,
                             ops_per_device_day=config.ops_per_device_day)
    write_fleet(config, args.out)
    _write_manifest(args.out, "simulate", args.started,
                    config_path=args.config)
    return EXIT_OK


def _report(args) -> int:
    docs = report.load_docs(args.findings)
    count = report.write_report(docs, args.out)
    _write_manifest(args.out, "report", args.started)
    return EXIT_FINDINGS if count else EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cct", description="compliance-test toolkit")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1,
                        help="worker hint for parallel pipelines")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a telemetry dataset")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_simulate)

    ana = sub.add_parser("analyze", help="run analysis pipelines")
    ana.add_argument("pipeline",
                     choices=["stats", "xvalidate", "rand", "keys",
                              "timing", "all"])
    ana.add_argument("--dataset", required=True)
    ana.add_argument("--out", default=None)
    ana.add_argument("--denylists", default=None)
    ana.add_argument("--keys", default=None,
                     help="fixed import-key file (defaults to built-ins)")
    ana.set_defaults(func=_analyze)

    rep = sub.add_parser("report", help="consolidate findings files")
    rep.add_argument("findings", nargs="+")
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    args.started = time.time()
    try:
        return args.func(args)
    except (CctError, OSError, ValueError) as exc:
        print(f"cct: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
