"""Validate config files against configs/schema.json.

usage: check_schema.py SCHEMA [--expect-invalid FILE ...] FILE...
"""
import argparse
import json
import sys

import jsonschema


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("schema")
    ap.add_argument("files", nargs="*")
    ap.add_argument("--expect-invalid", nargs="*", default=[])
    args = ap.parse_args()

    with open(args.schema) as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    bad = 0
    for path, want_valid in [(p, True) for p in args.files] + [(p, False) for p in args.expect_invalid]:
        with open(path) as f:
            errors = list(validator.iter_errors(json.load(f)))
        ok = (not errors) == want_valid
        note = "valid" if not errors else errors[0].message
        print(f"{'ok  ' if ok else 'FAIL'} {path}: {note}")
        bad += not ok
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
