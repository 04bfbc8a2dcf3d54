#!/usr/bin/env python3
"""Convert a MiniF2F checkout or export into the lemmahead problem format.

Output: JSON Lines, one object per problem:
  {"name", "split", "informal_statement", "formal_statement"}

Two input styles are supported:

1. JSON / JSONL exports (one file per split or a single file with a split
   field). Common field aliases are accepted: name/id/problem_name,
   informal_statement/informal_stmt/informal_prefix/problem,
   formal_statement/statement.

     python3 tools/minif2f_to_jsonl.py --json valid.jsonl --split validation \
         --json test.jsonl --split test -o minif2f.jsonl

2. A repository checkout with Lean sources (lean/src/valid.lean and
   lean/src/test.lean). Formal statements are the `theorem <name> ... :=`
   headers; informal statements, which the Lean files do not carry, come
   from an optional JSON map {name: informal} per split.

     python3 tools/minif2f_to_jsonl.py --lean-src path/to/lean/src \
         --informal valid=informal_valid.json --informal test=informal_test.json \
         -o minif2f.jsonl
"""

import argparse
import json
import re
import sys
from pathlib import Path

NAME_KEYS = ("name", "id", "problem_name")
INFORMAL_KEYS = ("informal_statement", "informal_stmt", "informal_prefix", "problem")
FORMAL_KEYS = ("formal_statement", "statement")

SPLIT_ALIASES = {"valid": "validation", "validation": "validation", "test": "test"}


def normalize_split(raw):
    key = str(raw).strip().lower()
    if key not in SPLIT_ALIASES:
        raise SystemExit(f"unknown split value: {raw!r}")
    return SPLIT_ALIASES[key]


def pick(record, keys, what, where):
    for key in keys:
        if key in record and str(record[key]).strip():
            return str(record[key])
    raise SystemExit(f"record in {where} is missing {what} (tried {', '.join(keys)})")


def load_json_records(path):
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("["):
        return json.loads(text)
    if stripped.startswith("{") and "\n" not in stripped.strip():
        return [json.loads(text)]
    records = []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise SystemExit(f"{path}:{line_no}: unparseable JSON: {exc}")
    return records


def from_json_export(path, split_override):
    problems = []
    for record in load_json_records(path):
        split = split_override or normalize_split(record.get("split", ""))
        problems.append(
            {
                "name": pick(record, NAME_KEYS, "a name", path),
                "split": split,
                "informal_statement": pick(record, INFORMAL_KEYS, "an informal statement", path),
                "formal_statement": pick(record, FORMAL_KEYS, "a formal statement", path),
            }
        )
    return problems


THEOREM_RE = re.compile(r"^theorem\s+([A-Za-z0-9_']+)", re.MULTILINE)


def split_lean_theorems(text):
    """Yields (name, header) for each `theorem <name> ... :=` in a Lean file."""
    matches = list(THEOREM_RE.finditer(text))
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        body = text[m.start():end]
        # keep the statement up to and including the trailing `:=`
        assign = body.find(":=")
        header = body[: assign + 2] if assign != -1 else body
        yield m.group(1), header.rstrip()


def from_lean_src(src_dir, informal_maps):
    problems = []
    for lean_name, split in (("valid.lean", "validation"), ("test.lean", "test")):
        path = Path(src_dir) / lean_name
        if not path.exists():
            print(f"note: {path} not found, skipping", file=sys.stderr)
            continue
        informal = informal_maps.get(split, {})
        for name, header in split_lean_theorems(path.read_text(encoding="utf-8")):
            statement = informal.get(name, "")
            if not statement:
                print(f"note: no informal statement for {name}; record skipped",
                      file=sys.stderr)
                continue
            problems.append(
                {
                    "name": name,
                    "split": split,
                    "informal_statement": statement,
                    "formal_statement": header,
                }
            )
    return problems


def main():
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--json", action="append", default=[],
                        help="JSON/JSONL export file (repeatable)")
    parser.add_argument("--split", action="append", default=[],
                        help="split for the matching --json file (validation|test)")
    parser.add_argument("--lean-src", help="directory holding valid.lean and test.lean")
    parser.add_argument("--informal", action="append", default=[],
                        help="split=path JSON map of {name: informal statement}")
    parser.add_argument("-o", "--output", required=True, help="output .jsonl path")
    args = parser.parse_args()

    problems = []
    for i, path in enumerate(args.json):
        override = normalize_split(args.split[i]) if i < len(args.split) else None
        problems.extend(from_json_export(path, override))

    if args.lean_src:
        informal_maps = {}
        for spec in args.informal:
            split, _, path = spec.partition("=")
            informal_maps[normalize_split(split)] = json.loads(
                Path(path).read_text(encoding="utf-8"))
        problems.extend(from_lean_src(args.lean_src, informal_maps))

    if not problems:
        raise SystemExit("no problems converted; pass --json or --lean-src")

    seen = set()
    for p in problems:
        if p["name"] in seen:
            raise SystemExit(f"duplicate problem name after merge: {p['name']}")
        seen.add(p["name"])

    with open(args.output, "w", encoding="utf-8") as out:
        for p in problems:
            out.write(json.dumps(p, ensure_ascii=False) + "\n")
    by_split = {}
    for p in problems:
        by_split[p["split"]] = by_split.get(p["split"], 0) + 1
    print(f"wrote {len(problems)} problems to {args.output} "
          f"({', '.join(f'{k}: {v}' for k, v in sorted(by_split.items()))})")


if __name__ == "__main__":
    main()
