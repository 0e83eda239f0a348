#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
# Apache-2.0, Copyright 2026 The meltcheck Authors

"""Prepend the license header to every project source file (idempotent)."""
import pathlib
import sys

NOTICE = "Apache-2.0, Copyright 2026 The meltcheck Authors"
ROOTS = ["src", "include", "tools", "tests", "CMakeLists.txt"]
SLASH = {".cpp", ".hpp", ".h"}
HASH = {".py", ".txt"}


def header_for(path):
    if path.suffix in SLASH:
        return f"// SPDX-License-Identifier: Apache-2.0\n// {NOTICE}\n\n"
    if path.suffix in HASH:
        return f"# SPDX-License-Identifier: Apache-2.0\n# {NOTICE}\n\n"
    return None


def main(repo):
    changed = 0
    for root in ROOTS:
        base = repo / root
        files = [base] if base.is_file() else sorted(base.rglob("*"))
        for path in files:
            if not path.is_file() or (path.suffix == ".txt" and path.name != "CMakeLists.txt"):
                continue
            header = header_for(path)
            if header is None:
                continue
            text = path.read_text()
            if NOTICE in text.split("\n\n", 1)[0] or NOTICE in "\n".join(text.splitlines()[:4]):
                continue
            if text.startswith("#!"):
                shebang, _, rest = text.partition("\n")
                text = shebang + "\n" + header + rest
            else:
                text = header + text
            path.write_text(text)
            changed += 1
    print(f"{changed} file(s) updated")


if __name__ == "__main__":
    main(pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ".").resolve())
