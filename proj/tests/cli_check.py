#!/usr/bin/env python3
"""End-to-end checks of the tnu command-line tool.

usage: cli_check.py <tnu binary> <data dir> <schema file>
"""

import json
import math
import os
import subprocess
import sys
import tempfile

import jsonschema

TNU, DATA, SCHEMA_PATH = sys.argv[1:4]
with open(SCHEMA_PATH) as fh:
    SCHEMA = json.load(fh)
jsonschema.Draft202012Validator.check_schema(SCHEMA)
VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)

failures = []


def run(*args, stdin=None):
    proc = subprocess.run([TNU, *args], input=stdin, capture_output=True, text=True, timeout=120)
    return proc.returncode, proc.stdout, proc.stderr


def report(*args, stdin=None, expect_rc=0):
    rc, out, err = run(*args, stdin=stdin)
    check(rc == expect_rc, f"{' '.join(args)}: exit {rc}, expected {expect_rc} ({err.strip()})")
    try:
        doc = json.loads(out)
    except json.JSONDecodeError:
        check(False, f"{' '.join(args)}: stdout is not JSON: {out[:200]!r}")
        return None
    errors = sorted(VALIDATOR.iter_errors(doc), key=str)
    check(not errors, f"{' '.join(args)}: schema violations: {[e.message for e in errors[:3]]}")
    return doc


def check(cond, message):
    if not cond:
        failures.append(message)


def close(a, b, tol):
    return a is not None and math.isfinite(a) and abs(a - b) <= tol


def data(name):
    return os.path.join(DATA, name)


# Location-scatter estimate of the balanced two-point law.
doc = report("estimate", data("two_point.csv"), "--nu", "2", "--tol", "1e-13")
if doc:
    check(doc["status"] == "ok", "estimate two_point: status")
    check(close(doc["payload"]["mu"][0], 0.5, 1e-9), "estimate two_point: mu")
    check(close(doc["payload"]["Sigma"][0][0], 0.25, 1e-9), "estimate two_point: Sigma")

# The same law from stdin.
with open(data("two_point.csv")) as fh:
    doc = report("estimate", "-", "--nu", "2", stdin=fh.read())
if doc:
    check(close(doc["payload"]["mu"][0], 0.5, 1e-8), "estimate from stdin: mu")

# Pure scatter on the four-point law is the identity.
doc = report("scatter", data("four_point.csv"), "--nu", "2", "--tol", "1e-13")
if doc:
    a = doc["payload"]["A"]
    check(all(close(a[i][j], float(i == j), 1e-9) for i in range(2) for j in range(2)), "scatter four_point: A = I")

# Domain report of a heavy atom: a report, not an error.
doc = report("check-domain", data("big_atom.csv"), "--nu", "2")
if doc:
    p = doc["payload"]
    check(p["member"] is False, "check-domain big_atom: member")
    check(p["worst_subspace_dim"] == 0, "check-domain big_atom: worst_subspace_dim")
    check(close(p["worst_mass"], 0.7, 1e-12), "check-domain big_atom: worst_mass")

doc = report("check-domain", data("four_point.csv"), "--nu", "2", "--kind", "scatter")
if doc:
    check(doc["payload"]["member"] is True, "check-domain four_point: member")

# Outside the domain, estimate refuses while oned extends.
for name in ("big_atom.csv", "threshold_atom.csv", "point_mass.csv", "line_mass.csv"):
    doc = report("estimate", data(name), "--nu", "2", expect_rc=2)
    if doc:
        check(doc["status"] == "domain_violation", f"estimate {name}: status")
        check(doc["payload"]["member"] is False, f"estimate {name}: payload member")

for name in ("big_atom.csv", "threshold_atom.csv", "point_mass.csv"):
    doc = report("oned", data(name), "--nu", "2")
    if doc:
        p = doc["payload"]
        check(p["boundary"] is True and p["mu"] == 0.0 and p["sigma"] == 0.0, f"oned {name}: extended value")

doc = report("oned", data("two_point.csv"), "--nu", "2")
if doc:
    check(close(doc["payload"]["mu"], 0.5, 1e-9) and close(doc["payload"]["sigma"], 0.5, 1e-9), "oned two_point")

# Asymptotic covariance of the four-point scatter functional.
doc = report("asymptotics", data("four_point.csv"), "--nu", "2", "--kind", "scatter", "--tol", "1e-13")
if doc:
    s = doc["payload"]["S"]
    want = [[4, -4, 0], [-4, 4, 0], [0, 0, 0]]
    check(all(close(s[i][j], want[i][j], 1e-7) for i in range(3) for j in range(3)), "asymptotics four_point: S")
    check(doc["payload"]["rank"] == 1, "asymptotics four_point: rank")

doc = report("asymptotics", data("t_sample.csv"), "--nu", "3")
if doc:
    check(doc["payload"]["parametrization"] == "locscatter_muSigma", "asymptotics t_sample: parametrization")
    check(doc["payload"]["rank"] == 5, "asymptotics t_sample: rank")

# Monte Carlo on the four-point law, with replicate output.
with tempfile.TemporaryDirectory() as tmp:
    reps_csv = os.path.join(tmp, "reps.csv")
    doc = report("simulate", data("four_point.csv"), "--nu", "2", "--kind", "scatter", "--n", "500",
                 "--reps", "50", "--seed", "7", "--replicates-csv", reps_csv)
    if doc:
        check(doc["payload"]["reps"] == 50 and doc["payload"]["existence_rate"] == 1.0, "simulate: counts")
    with open(reps_csv) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    check(len(lines) == 51, f"simulate: replicate csv has {len(lines)} lines, expected header + 50")

    # Reproducible for a fixed seed, whatever the thread count.
    rc1, out1, _ = run("simulate", data("four_point.csv"), "--nu", "2", "--kind", "scatter", "--n", "300",
                       "--reps", "20", "--seed", "11", "--threads", "1")
    rc2, out2, _ = run("simulate", data("four_point.csv"), "--nu", "2", "--kind", "scatter", "--n", "300",
                       "--reps", "20", "--seed", "11", "--threads", "3")
    if rc1 == 0 and rc2 == 0:
        p1, p2 = json.loads(out1)["payload"], json.loads(out2)["payload"]
        check(p1["empirical_cov"] == p2["empirical_cov"], "simulate: thread-count independence")
    else:
        check(False, "simulate: reproducibility runs failed")

    # Output to a file, and the flat CSV format.
    out_path = os.path.join(tmp, "out.json")
    rc, out, _ = run("estimate", data("two_point.csv"), "--nu", "2", "-o", out_path)
    check(rc == 0 and out == "", "estimate -o: exit code and empty stdout")
    with open(out_path) as fh:
        check(json.load(fh)["payload"]["nu"] == 2.0, "estimate -o: file content")

rc, out, _ = run("estimate", data("two_point.csv"), "--nu", "2", "--format", "csv")
check(rc == 0 and out.startswith("field,value"), "estimate --format csv: header")
rows = dict(line.split(",", 1) for line in out.splitlines()[1:] if "," in line)
check("status" in rows and rows["status"] == "ok", "estimate --format csv: status row")

# Non-convergence exits 3 with a report.
doc = report("estimate", data("t_sample.csv"), "--nu", "2", "--max-iter", "1", expect_rc=3)
if doc:
    check(doc["status"] == "not_converged", "estimate --max-iter 1: status")

# Usage errors exit 1 without a report.
for args in (
    ("estimate", data("two_point.csv")),                       # missing --nu
    ("estimate", data("two_point.csv"), "--nu", "1"),         # nu <= 1 for location-scatter
    ("scatter", data("two_point.csv"), "--nu", "0"),          # nu <= 0
    ("estimate", data("missing.csv"), "--nu", "2"),           # unreadable input
    ("simulate", data("four_point.csv"), "--nu", "2", "--reps", "1"),
    ("estimate", data("two_point.csv"), "--nu", "2", "--format", "xml"),
    ("frobnicate",),
):
    rc, out, err = run(*args)
    check(rc == 1, f"{' '.join(args)}: exit {rc}, expected 1")
    check(out == "", f"{' '.join(args)}: unexpected stdout")

rc, out, err = run("estimate", "-", "--nu", "2", stdin="x\n0\nnan\n1\n")
check(rc == 1 and "row 3" in err, f"bad csv: exit {rc}, stderr {err.strip()!r}")

if failures:
    for f in failures:
        print("FAIL:", f)
    sys.exit(1)
print("all CLI checks passed")
