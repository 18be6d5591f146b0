"""Runs every CLI command once and validates its JSON output against the schema files."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

exe, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])

with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    (tmp / "h.csv").write_text("symbol,count\n" + "".join(f"{i},{i % 7}\n" for i in range(1, 60)))
    runs = {
        "estimate": ["estimate", "--phi", "shannon", "--input", str(tmp / "h.csv"),
                     "--c1", "1", "--c2", "0.5", "--unchecked"],
        "approx": ["approx", "--phi", "power:0.5", "--L", "8", "--interval", "0,0.1"],
        "check-speed": ["check-speed", "--phi", "shannon", "--ell", "2"],
        "lower-bound": ["lower-bound", "--phi", "shannon", "--k", "100", "--n", "1000"],
        "priors": ["priors", "--phi", "power:0.5", "--L", "4", "--interval", "0,1",
                   "--out", str(tmp / "p.csv")],
        "risk-sweep": ["risk-sweep", "--alpha", "0.5", "--n-grid", "100,300,1000,3000",
                       "--k-rule", "prop:0.5", "--reps", "100", "--c1", "1", "--c2", "0.5",
                       "--unchecked", "--estimators", "plugin,composite",
                       "--out", str(tmp / "r.csv")],
    }
    extra = [
        ("lower-bound", ["lower-bound", "--phi", "shannon", "--construction", "hellinger",
                         "--k", "10", "--n", "100"]),
        ("lower-bound", ["lower-bound", "--phi", "power:0.5", "--construction", "poisson-tv",
                         "--L", "8", "--interval", "0,0.01", "--n", "100", "--k", "10"]),
        ("lower-bound", ["lower-bound", "--phi", "power:0.5", "--construction", "best-poly",
                         "--n", "1000", "--k", "1000", "--lambda", "0.05", "--L", "4",
                         "--d", "0.001"]),
        ("estimate", ["estimate", "--phi", "power:1.5", "--input", str(tmp / "h.csv"),
                      "--mode", "plugin"]),
    ]
    failures = 0
    for name, args in list(runs.items()) + extra:
        schema = json.loads((schema_dir / f"{name}.schema.json").read_text())
        proc = subprocess.run([exe, "--seed", "3", *args], capture_output=True, text=True)
        try:
            if proc.returncode != 0:
                raise RuntimeError(f"exit {proc.returncode}: {proc.stderr.strip()}")
            jsonschema.validate(json.loads(proc.stdout), schema)
            print(f"ok   {' '.join(args[:3])}")
        except Exception as e:  # report every command, not just the first failure
            failures += 1
            print(f"FAIL {' '.join(args[:3])}: {e}")
    sys.exit(1 if failures else 0)
