"""Cross-checks the shipped schemas with the jsonschema package.

Every schemas/*.json must be a valid draft 2020-12 schema. Every case under
<cases>/<schema id>/{valid,invalid}/*.json must get that verdict. Extra
documents can be validated with --doc <schema id> <file>.
"""
import argparse
import glob
import json
import os
import sys

import jsonschema


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("schemas")
    ap.add_argument("cases")
    ap.add_argument("--doc", nargs=2, action="append", default=[], metavar=("ID", "FILE"))
    args = ap.parse_args()

    schemas = {}
    for p in sorted(glob.glob(os.path.join(args.schemas, "*.json"))):
        s = json.load(open(p))
        jsonschema.Draft202012Validator.check_schema(s)
        schemas[os.path.splitext(os.path.basename(p))[0]] = jsonschema.Draft202012Validator(s)

    bad = 0
    n = 0
    for p in sorted(glob.glob(os.path.join(args.cases, "*", "*", "*.json"))):
        sid, verdict = p.split(os.sep)[-3:-1]
        doc = json.load(open(p))
        ok = schemas[sid].is_valid(doc)
        n += 1
        if ok != (verdict == "valid"):
            print("MISMATCH", p)
            bad += 1
    for sid, f in args.doc:
        n += 1
        errs = list(schemas[sid].iter_errors(json.load(open(f))))
        if errs:
            print("INVALID", f, errs[0].message)
            bad += 1
    print(f"{len(schemas)} schemas, {n} documents, {bad} mismatches")
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()
