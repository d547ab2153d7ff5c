#!/usr/bin/env python3
# Copyright 2026 The xdpvliw Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Prepend the license header to source files that lack it."""

import argparse
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
DIRS = ["src", "include", "tools", "tests", "python"]
SLASH = {".cpp", ".hpp", ".h", ".cc"}
HASH = {".py", ".cmake"}


def header_for(path: Path, header: list[str]) -> str | None:
    if path.suffix in SLASH:
        return "\n".join(header) + "\n\n"
    if path.suffix in HASH or path.name == "CMakeLists.txt":
        return "\n".join("#" + line[2:] if line.startswith("//") else line for line in header) + "\n\n"
    return None


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--check", action="store_true", help="list files missing the header and fail")
    args = parser.parse_args()
    header = (ROOT / ".license_header").read_text().rstrip("\n").splitlines()
    files = [ROOT / "CMakeLists.txt"]
    for d in DIRS:
        files += sorted(p for p in (ROOT / d).rglob("*") if p.is_file())
    missing = []
    for path in files:
        text_header = header_for(path, header)
        if text_header is None:
            continue
        text = path.read_text()
        body = text
        shebang = ""
        if text.startswith("#!"):
            shebang, _, body = text.partition("\n")
            shebang += "\n"
        if body.startswith(text_header.rstrip("\n")):
            continue
        missing.append(path)
        if not args.check:
            path.write_text(shebang + text_header + body)
    for path in missing:
        print(path.relative_to(ROOT))
    return 1 if args.check and missing else 0


if __name__ == "__main__":
    raise SystemExit(main())
