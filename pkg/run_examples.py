#!/usr/bin/env python3
"""Launcher for the WENO-DS example scripts.

Lists the scripts in ``src/examples`` with their one-line summaries and
runs one of them with the current interpreter. Runner flags are only
forwarded to scripts that declare them.
"""

import argparse
import ast
import subprocess
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

EXAMPLES_DIR = Path(__file__).resolve().parent / "src" / "examples"


def find_examples(examples_dir: Path = EXAMPLES_DIR) -> Dict[str, Path]:
    """Map example name to script path, skipping package files."""
    if not examples_dir.is_dir():
        return {}
    return {path.stem: path for path in sorted(examples_dir.glob("*.py"))
            if not path.name.startswith("__")}


def summary(script: Path) -> str:
    """First line of the script's module docstring, or an empty string."""
    try:
        doc = ast.get_docstring(ast.parse(script.read_text(encoding="utf-8")))
    except (OSError, SyntaxError):
        return ""
    return doc.splitlines()[0] if doc else ""


def declares_flag(script: Path, flag: str) -> bool:
    """Whether the script's argument parser declares ``flag``."""
    try:
        source = script.read_text(encoding="utf-8")
    except OSError:
        return False
    return f'"{flag}"' in source or f"'{flag}'" in source


def build_command(script: Path, debug: bool = False,
                  extra: Optional[Sequence[str]] = None) -> List[str]:
    """Interpreter command line for one example."""
    cmd = [sys.executable, str(script)]
    if debug:
        if declares_flag(script, "--debug"):
            cmd.append("--debug")
        else:
            print(f"⚠️ {script.stem} has no --debug flag; running without it")
    cmd.extend(extra or [])
    return cmd


def print_examples(examples: Dict[str, Path]) -> None:
    print("Available examples:")
    width = max((len(name) for name in examples), default=0)
    for name, path in examples.items():
        print(f"  {name.ljust(width)}  {summary(path)}")
    print("\nUsage: python run_examples.py EXAMPLE [--debug] [example options]")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the selected example and return its exit code."""
    examples = find_examples()
    if not examples:
        print(f"❌ No example scripts found in {EXAMPLES_DIR}")
        return 1

    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        print_examples(examples)
        return 0

    parser = argparse.ArgumentParser(description="Run WENO-DS examples")
    parser.add_argument("example", choices=sorted(examples), help="Example to run")
    parser.add_argument("--debug", action="store_true",
                        help="Pass --debug to the example when it supports it")
    parser.add_argument("args", nargs=argparse.REMAINDER,
                        help="Additional arguments to pass to the example")
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    cmd = build_command(examples[args.example], args.debug, args.args)
    print(f"Running: {' '.join(cmd)}")
    try:
        return subprocess.call(cmd)
    except KeyboardInterrupt:
        print("\nOperation aborted by user")
        return 130


if __name__ == "__main__":
    sys.exit(main())
