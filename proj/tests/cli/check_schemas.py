# SPDX-License-Identifier: Apache-2.0
"""Runs each umri subcommand on a small problem and validates its JSON outputs."""

import argparse
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource

SMALL_DECODER = ["--layers", "3", "--channels", "4", "--in-channels", "4", "--in-height", "4", "--in-width", "4",
                 "--iters", "5"]


def load(path):
    with open(path) as f:
        return json.load(f)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--umri", required=True)
    ap.add_argument("--schemas", required=True)
    args = ap.parse_args()

    schema_dir = pathlib.Path(args.schemas)
    schemas = {p.name: load(p) for p in schema_dir.glob("*.schema.json")}
    registry = Registry().with_resources(
        (s["$id"], Resource.from_contents(s)) for s in schemas.values())

    def check(doc, name):
        schema = schemas[name]
        jsonschema.Draft202012Validator.check_schema(schema)
        jsonschema.Draft202012Validator(schema, registry=registry).validate(doc)
        print(f"ok  {name}")

    def umri(*argv):
        r = subprocess.run([args.umri, *argv], capture_output=True, text=True)
        if r.returncode != 0:
            sys.exit(f"umri {' '.join(argv)} exited {r.returncode}: {r.stderr}")
        return r.stdout.strip()

    with tempfile.TemporaryDirectory() as tmp:
        d = pathlib.Path(tmp)
        check(load(umri("phantom", "--out", str(d / "ph"), "--height", "32", "--width", "32", "--coils", "3")),
              "phantom_manifest.schema.json")
        inputs = ["--kspace", str(d / "ph/kspace.umri"), "--mask", str(d / "ph/mask.umri"),
                  "--sens", str(d / "ph/maps.umri")]

        umri("recon", *inputs, *SMALL_DECODER, "--out", str(d / "cd.umri"), "--gt", str(d / "ph/image.umri"),
             "--ensemble", "2")
        check(load(d / "cd.manifest.json"), "recon_manifest.schema.json")
        check(load(d / "cd.metrics.json"), "metric_report.schema.json")

        umri("recon", *inputs, "--method", "tv", "--tv-iters", "5", "--out", str(d / "tv.umri"))
        check(load(d / "tv.manifest.json"), "recon_manifest.schema.json")

        grid = d / "grid.json"
        grid.write_text(json.dumps([{"n_layers": 3, "channels": 4, "sens": 1},
                                    {"n_layers": 2, "channels": 4, "sens": 0}]))
        chosen = umri("autotune", *inputs, "--grid", str(grid), "--in-channels", "4", "--in-height", "4",
                      "--in-width", "4", "--iters", "5", "--q", "0.3", "--out", str(d / "tune.json"))
        check(load(d / "tune.json"), "autotune_table.schema.json")
        check(load(chosen), "chosen_config.schema.json")

        check(json.loads(umri("eval", "--recon", str(d / "cd.umri"), "--gt", str(d / "ph/image.umri"))),
              "metric_report.schema.json")
        check(json.loads(umri("eval", "--recon", str(d / "ph/image.umri"), "--gt", str(d / "ph/image.umri"))),
              "metric_report.schema.json")


if __name__ == "__main__":
    main()
