"""Command-line front end.

    bbhsim run SCENARIO        simulate, apply the scenario's checks, write trace and report
    bbhsim modelcheck SCENARIO search every activation schedule instead of one adversary
    bbhsim suite MANIFEST      run many scenarios and compare verdicts with expectations
    bbhsim gen KIND key=value  write a graph file
    bbhsim render TRACE        draw a time diagram

Exit codes: 0 when every check passes, 1 when a property fails, 2 for bad
arguments or malformed input files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema

from . import graph as graphs
from .adversary import PredicateError, make_adversary
from .agents import ProgramSpecError, make_programs
from .engine import ProtocolFault, run
from .graph import GraphError, Instance
from .render import LAYOUTS, TraceFormatError, load_trace, render_png, time_diagram
from .verify import (FAIL, PASS, CheckVerdict, CoverageSpec, check_anchors, check_casualties,
                     check_coverage, check_lg_safety, check_map, check_survivor_knowledge,
                     coverage_plan, model_check)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["graph", "program", "horizon"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "string"},
        "graph": {
            "type": "object",
            "oneOf": [{"required": ["file"]}, {"required": ["generator"]}],
            "properties": {"file": {"type": "string"}, "generator": {"type": "string"}},
        },
        "k": {"type": "integer", "minimum": 1},
        "program": {"type": "object", "required": ["algorithm"],
                    "properties": {"algorithm": {"type": "string"}}},
        "adversary": {"type": "object", "required": ["name"], "properties": {"name": {"type": "string"}}},
        "horizon": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "auto"}]},
        "seed": {"type": "integer"},
        "checks": {"type": "array", "items": {
            "type": "object", "required": ["property"],
            "properties": {"property": {"enum": ["coverage", "survivor-knowledge", "casualties",
                                                "anchors", "lg-safety", "map"]}}}},
        "modelcheck": {"oneOf": [{"type": "boolean"}, {"type": "object", "properties": {
            "prune": {"type": "boolean"}, "budget": {"type": "integer", "minimum": 1}}}]},
    },
}

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["scenarios"],
    "properties": {
        "name": {"type": "string"},
        "scenarios": {"type": "array", "items": {
            "type": "object", "required": ["id", "expect"],
            "oneOf": [{"required": ["scenario"]}, {"required": ["file"]}],
            "properties": {"id": {"type": "string"}, "expect": {"enum": [PASS, FAIL]},
                           "file": {"type": "string"}, "scenario": {"type": "object"}}}},
    },
}

DEFAULT_TEAM = {"path6": 6, "path4": 4, "tree6": 6, "tree4": 4, "ring4": 4}


# ----------------------------------------------------------------- graphs


def _generate(spec: dict, seed: int) -> Instance:
    p = dict(spec)
    kind = p.pop("generator")
    k = int(p.pop("k", 1))
    try:
        if kind == "path":
            return graphs.build_path(int(p["n"]), int(p.get("home", 0)), p.get("bbh"), k)
        if kind == "ring":
            return graphs.build_ring(int(p["n"]), int(p.get("home", 0)), p.get("bbh"), k)
        if kind == "tree":
            return graphs.build_tree(p["edges"], int(p.get("home", 0)), p.get("bbh"), k, p.get("max_degree"))
        if kind == "random":
            return graphs.build_random_bounded(int(p["n"]), int(p["max_degree"]), int(p.get("seed", seed)), k,
                                               int(p.get("home", 0)), p.get("bbh", "random"))
        if kind == "bh_lowerbound":
            return graphs.build_bh_lowerbound_graph(int(p["delta"]), k)
        if kind == "lowerbound_family":
            return graphs.build_lowerbound_family(int(p["delta"]), p["segment_lengths"], p["membership"], k)
    except KeyError as exc:
        raise UsageError(f"generator {kind!r} is missing parameter {exc}") from exc
    raise UsageError(f"unknown generator {kind!r}")


def load_instance(spec: dict, seed: int, base: Path) -> Instance:
    if "file" in spec:
        path = base / spec["file"]
        try:
            return Instance.from_json(path.read_text())
        except OSError as exc:
            raise UsageError(f"cannot read graph file {path}: {exc}") from exc
    return _generate(spec, seed)


def _team_size(program: dict, instance: Instance, given: int | None) -> int:
    if given is not None:
        return given
    alg = program["algorithm"]
    if alg in DEFAULT_TEAM:
        return DEFAULT_TEAM[alg]
    delta = instance.graph.max_degree
    if alg == "graph3d3":
        return 3 * delta + 3
    if alg == "bh_delta2":
        return delta + 2
    raise UsageError(f"unknown algorithm {alg!r}")


# --------------------------------------------------------------- scenarios


class Scenario:
    """A validated scenario file with its graph and programs built."""

    def __init__(self, doc: dict, base: Path, horizon: int | None = None, seed: int | None = None):
        try:
            jsonschema.validate(doc, SCENARIO_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise UsageError(f"scenario: {exc.message}") from exc
        self.doc = doc
        self.id = doc.get("id", "scenario")
        self.seed = seed if seed is not None else int(doc.get("seed", 0))
        try:
            inst = load_instance(doc["graph"], self.seed, base)
            inst = inst.with_agents(_team_size(doc["program"], inst, doc.get("k")))
            self.programs = make_programs(dict(doc["program"]), inst)
            self.adversary = make_adversary(doc.get("adversary", {"name": "benign"}))
        except (GraphError, ProgramSpecError, PredicateError, ValueError, TypeError) as exc:
            raise UsageError(f"scenario {self.id}: {exc}") from exc
        self.instance = inst
        self.checks = doc.get("checks", [])
        h = horizon if horizon is not None else doc["horizon"]
        self._auto = None
        if h == "auto":
            h = self.auto_plan()[0]
        self.horizon = int(h)

    def auto_plan(self, target="HOME_COMPONENT"):
        if self._auto is None:
            try:
                self._auto = coverage_plan(self.instance, self.programs, target)
            except (KeyError, ValueError) as exc:
                raise UsageError(f"scenario {self.id}: no automatic window for this program ({exc})") from exc
        return self._auto

    def coverage_spec(self, check: dict) -> CoverageSpec:
        target = check.get("target", "HOME_COMPONENT")
        if check.get("window", "auto") == "auto":
            spec = self.auto_plan(target)[1]
            return CoverageSpec(target, spec.warmup, spec.window)
        try:
            return CoverageSpec(target, int(check.get("warmup", 0)), int(check["window"]))
        except (KeyError, ValueError) as exc:
            raise UsageError(f"scenario {self.id}: bad coverage check {check}: {exc}") from exc

    def evaluate(self, trace) -> list[CheckVerdict]:
        out = []
        for c in self.checks:
            prop = c["property"]
            if prop == "coverage":
                out.append(check_coverage(trace, None, self.coverage_spec(c)))
            elif prop == "survivor-knowledge":
                out.append(check_survivor_knowledge(trace, self.instance, self.programs))
            elif prop == "casualties":
                out.append(check_casualties(trace, self.programs, c.get("max_destroyed"), c.get("exact"),
                                            c.get("min_free")))
            elif prop == "anchors":
                out.append(check_anchors(trace, self.programs))
            elif prop == "lg-safety":
                out.append(check_lg_safety(trace, self.programs))
            elif prop == "map":
                out.append(check_map(trace, self.programs))
        return out

    def simulate(self):
        """Run once; returns (trace, verdicts)."""
        try:
            trace = run(self.instance, self.programs, self.adversary, self.horizon)
        except ProtocolFault as fault:
            return fault.trace, [CheckVerdict("protocol", FAIL, str(fault), fault.trace)]
        return trace, self.evaluate(trace)

    def search(self):
        """Model-check every schedule; returns (counterexample trace or None, verdicts)."""
        opts = self.doc.get("modelcheck")
        opts = opts if isinstance(opts, dict) else {}
        cov = [self.coverage_spec(c) for c in self.checks if c["property"] == "coverage"]
        knowledge = any(c["property"] == "survivor-knowledge" for c in self.checks)
        v = model_check(self.instance, self.programs, self.horizon, cov[0] if cov else None,
                        knowledge=knowledge, prune=opts.get("prune", True),
                        budget=opts.get("budget", 2_000_000))
        return v.counterexample, [v]

    def execute(self, force_search: bool = False):
        if force_search or self.doc.get("modelcheck"):
            return self.search()
        return self.simulate()

    def report(self, trace, verdicts, trace_file: str | None = None) -> dict:
        ok = all(v.verdict == PASS for v in verdicts)
        doc = {
            "scenario": self.id,
            "program": self.programs.name,
            "k": self.instance.k,
            "horizon": self.horizon,
            "seed": self.seed,
            "verdict": PASS if ok else FAIL,
            "checks": [v.to_dict(trace_file if v.verdict == FAIL and trace is not None else None)
                       for v in verdicts],
        }
        if trace is not None:
            doc["rounds"] = trace.rounds_run
            doc["destroyed"] = trace.final.destroyed_count
            if trace.records and trace.anchors():
                doc["anchors"] = trace.anchors()
        return doc


def read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_outputs(sc: Scenario, trace, verdicts, out: str | None) -> dict:
    trace_file = None
    if out is not None and trace is not None:
        os.makedirs(out, exist_ok=True)
        trace_file = os.path.join(out, f"{sc.id}.trace.jsonl")
        with open(trace_file, "w", encoding="utf-8") as fh:
            fh.write(trace.to_jsonl(sc.programs, header=True))
    report = sc.report(trace, verdicts, trace_file and os.path.basename(trace_file))
    if out is not None:
        with open(os.path.join(out, f"{sc.id}.report.json"), "w", encoding="utf-8") as fh:
            fh.write(dumps(report))
    return report


# ---------------------------------------------------------------- commands


def cmd_run(args, force_search: bool = False) -> int:
    path = Path(args.scenario)
    sc = Scenario(read_json(path), path.parent, args.horizon, args.seed)
    trace, verdicts = sc.execute(force_search)
    report = write_outputs(sc, trace, verdicts, args.out)
    sys.stdout.write(dumps(report))
    return EXIT_OK if report["verdict"] == PASS else EXIT_FAIL


def shipped_manifests() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("bbhsim.manifests").iterdir() if p.name.endswith(".json"))


def resolve_manifest(name: str) -> tuple[dict, Path]:
    path = Path(name)
    if path.exists():
        return read_json(path), path.parent
    if name in shipped_manifests():
        res = resources.files("bbhsim.manifests") / f"{name}.json"
        return json.loads(res.read_text()), Path(".")
    raise UsageError(f"no manifest {name!r}; shipped ones are {', '.join(shipped_manifests())}")


def _suite_job(job):
    entry, base, out, horizon, seed = job
    if "scenario" in entry:
        doc = dict(entry["scenario"], id=entry["id"])
        sbase = base
    else:
        p = base / entry["file"]
        doc = dict(read_json(p), id=entry["id"])
        sbase = p.parent
    try:
        sc = Scenario(doc, sbase, horizon, seed)
    except UsageError as exc:
        return {"id": entry["id"], "expect": entry["expect"], "verdict": "ERROR", "detail": str(exc)}
    trace, verdicts = sc.execute()
    report = write_outputs(sc, trace, verdicts, out)
    failed = [v["property"] for v in report["checks"] if v["verdict"] != PASS]
    return {"id": entry["id"], "expect": entry["expect"], "verdict": report["verdict"], "failed": failed}


def job_count(flag: int | None) -> int:
    env = os.environ.get("BBH_SIM_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"BBH_SIM_JOBS must be an integer, got {env!r}") from exc
    return max(1, flag or 1)


def cmd_suite(args) -> int:
    manifest, base = resolve_manifest(args.manifest)
    try:
        jsonschema.validate(manifest, MANIFEST_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise UsageError(f"manifest: {exc.message}") from exc
    entries = manifest["scenarios"]
    ids = [e["id"] for e in entries]
    if len(set(ids)) != len(ids):
        raise UsageError("manifest scenario ids must be unique")
    jobs = [(e, base, args.out, args.horizon, args.seed) for e in entries]
    n = job_count(args.jobs)
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_suite_job, jobs))
    else:
        results = [_suite_job(j) for j in jobs]
    results.sort(key=lambda r: r["id"])
    mismatched = [r["id"] for r in results if r["verdict"] != r["expect"]]
    summary = {"manifest": manifest.get("name", args.manifest), "total": len(results),
               "matched": len(results) - len(mismatched), "mismatched": mismatched, "results": results}
    text = dumps(summary)
    if args.out is not None:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "suite.report.json"), "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK if not mismatched else EXIT_FAIL


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_gen(args) -> int:
    params = {"generator": args.kind}
    for item in args.params:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        params[key] = _parse_value(value)
    try:
        inst = _generate(params, args.seed if args.seed is not None else 0)
    except (GraphError, ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    text = inst.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_render(args) -> int:
    try:
        text = Path(args.trace).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.trace}: {exc}") from exc
    try:
        header, records = load_trace(text)
        if args.out and args.out.endswith(".png"):
            render_png(header, records, args.out, args.layout)
            return EXIT_OK
        diagram = time_diagram(header, records, args.layout)
    except TraceFormatError as exc:
        raise UsageError(f"{args.trace}: {exc}") from exc
    if args.out:
        Path(args.out).write_text(diagram)
    else:
        sys.stdout.write(diagram)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bbhsim", description="Perpetual exploration with a Byzantine black hole.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument("--horizon", type=int, help="override the scenario horizon")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--out", help=out_help)

    p = sub.add_parser("run", help="simulate one scenario")
    p.add_argument("scenario")
    common(p, "directory for the trace and report")
    p = sub.add_parser("modelcheck", help="check a scenario against every activation schedule")
    p.add_argument("scenario")
    common(p, "directory for the counterexample and report")
    p = sub.add_parser("suite", help="run a manifest of scenarios")
    p.add_argument("manifest", help="manifest file or shipped name (%s)" % ", ".join(shipped_manifests()))
    common(p, "directory for traces and reports")
    p.add_argument("--jobs", type=int, help="parallel workers (BBH_SIM_JOBS overrides)")
    p = sub.add_parser("gen", help="write a graph file")
    p.add_argument("kind", help="path, ring, tree, random, bh_lowerbound or lowerbound_family")
    p.add_argument("params", nargs="*", help="key=value generator parameters (values are JSON)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output file (default stdout)")
    p = sub.add_parser("render", help="draw a trace as a time diagram")
    p.add_argument("trace")
    p.add_argument("--layout", choices=LAYOUTS, default="linear")
    p.add_argument("--out", help="output file; a .png name draws with matplotlib")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "modelcheck":
            return cmd_run(args, force_search=True)
        if args.command == "suite":
            return cmd_suite(args)
        if args.command == "gen":
            return cmd_gen(args)
        return cmd_render(args)
    except UsageError as exc:
        print(f"bbhsim: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
