"""Command-line checks: exit codes, printed summaries and report schemas."""

import csv
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

CLI = sys.argv[1]
SCHEMAS = pathlib.Path(sys.argv[2])
VALIDATOR = jsonschema.Draft202012Validator

failures = []


def run(*args):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, timeout=600)


def check(name, ok, detail=""):
    print(("ok   " if ok else "FAIL ") + name + ("" if ok else " :: " + detail))
    if not ok:
        failures.append(name)


def schema(name):
    s = json.loads((SCHEMAS / name).read_text())
    VALIDATOR.check_schema(s)
    return s


REPORT, MANIFEST, INSTANCE = schema("report.schema.json"), schema("manifest.schema.json"), schema("instance.schema.json")


def validate(path, s):
    errors = [e.message for e in VALIDATOR(s).iter_errors(json.loads(path.read_text()))]
    check("schema " + path.name, not errors, "; ".join(errors[:3]))


with tempfile.TemporaryDirectory() as tmp:
    root = pathlib.Path(tmp)

    p = run("generate", "--kind", "canned", "--entry", "lcp1d", "--name", "lcp1d", "--out", root)
    check("generate canned exits 0", p.returncode == 0, p.stderr)
    lcp = root / "instances" / "lcp1d.json"
    check("generate writes instance and manifest", lcp.is_file() and (root / "manifests" / "lcp1d.json").is_file())

    p = run("residual", "--instance", lcp, "--x", "3")
    check("residual exits 0", p.returncode == 0, p.stderr)
    check("residual prints r=[2] norm=2", p.stdout.startswith("r=[2] norm=2"), p.stdout)

    p = run("residual", "--instance", lcp, "--x", "3", "--bogus")
    check("unknown flag exits 2", p.returncode == 2, str(p.returncode))
    check("no subcommand exits 2", run().returncode == 2)
    check("dimension mismatch exits 2", run("residual", "--instance", lcp, "--x", "1,2").returncode == 2)
    check("missing instance file exits 3", run("residual", "--instance", root / "none.json", "--x", "1").returncode == 3)
    check("cap exceeded exits 3", run("generate", "--kind", "avi", "--n", "51", "--out", root).returncode == 3)
    corrupt = root / "corrupt.json"
    corrupt.write_text("{ not json")
    check("corrupt instance exits 2", run("residual", "--instance", corrupt, "--x", "1").returncode == 2)

    # M = 0, q = -1 on the half-line has no solution, so the verdict fails.
    none = root / "none_avi.json"
    none.write_text(json.dumps({"schema_version": "1", "kind": "avi", "instance": {
        "M": [[0.0]], "q": [-1.0], "C": {"n": 1, "ineq": [{"a": [-1.0], "b": 0.0}], "eq": []}}}))
    p = run("verify-error-bound", "--instance", none)
    check("unsolvable instance exits 1", p.returncode == 1, p.stdout + p.stderr)

    reports = root / "reports"
    commands = [
        ("project", "--instance", "canned:zero_simplex", "--x", "2,-1"),
        ("residual", "--instance", lcp, "--x", "3"),
        ("solve", "--instance", "canned:skew2d", "--distances"),
        ("enumerate", "--instance", "canned:ray2d"),
        ("verify-error-bound", "--instance", lcp),
        ("verify-error-bound", "--instance", "canned:ray2d", "--radius-search", "--samples", "128"),
        ("verify-lipschitz", "--instance", "canned:skew2d"),
        ("verify-lipschitz", "--instance", "canned:gpm_interval"),
        ("verify-minimax", "--instance", "canned:gpm_scaled"),
        ("truncation-study", "--dims", "5,10"),
    ]
    for args in commands:
        p = run(*args, "--out", reports)
        check(" ".join(map(str, args[:3])) + " exits 0", p.returncode == 0, p.stdout + p.stderr)

    for g in (("--kind", "avi", "--n", "3", "--m", "4", "--seed", "2"),
              ("--kind", "gpm", "--seed", "2", "--bounded-sections"),
              ("--kind", "truncation", "--spectrum", "harmonic", "--n", "6")):
        p = run("generate", *g, "--out", root)
        check("generate " + g[1] + " exits 0", p.returncode == 0, p.stderr)

    suite = root / "suite"
    p = run("suite", "--seed", "7", "--out", suite)
    check("suite exits 0", p.returncode == 0, p.stdout + p.stderr)
    check("suite prints PASS", p.stdout.startswith("suite: PASS"), p.stdout)
    suite_reports = sorted(suite.glob("*.json"))
    check("suite writes at least 8 reports", len(suite_reports) >= 8, str(len(suite_reports)))
    with open(suite / "suite_summary.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    check("suite summary rows all pass", rows and all(r["verdict"] == "pass" for r in rows))

    for path in sorted(reports.glob("*.json")) + suite_reports:
        validate(path, REPORT)
    for path in sorted((root / "manifests").glob("*.json")):
        validate(path, MANIFEST)
    for path in sorted((root / "instances").glob("*.json")):
        validate(path, INSTANCE)

    broken = json.loads(suite_reports[0].read_text())
    del broken["verdict"]
    check("schema rejects a report without verdict", not VALIDATOR(REPORT).is_valid(broken))

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
