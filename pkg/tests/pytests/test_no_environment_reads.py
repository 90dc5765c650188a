from __future__ import annotations

import argparse
import ast
from pathlib import Path

from scripts.graphenc.cli import build_parser
from scripts.graphenc.config import ConfigKey


def _iter_py_files() -> list[Path]:
    repo_root = Path(__file__).parents[2]
    package_dir = repo_root / "scripts" / "graphenc"
    return sorted([p for p in package_dir.rglob("*.py") if p.is_file()])


def _is_os_attribute(node: ast.AST, attr: str) -> bool:
    # Matches os.<attr>
    return (
        isinstance(node, ast.Attribute)
        and node.attr == attr
        and isinstance(node.value, ast.Name)
        and node.value.id == "os"
    )


def test_package_never_reads_the_environment() -> None:
    offenders: list[str] = []

    for path in _iter_py_files():
        tree = ast.parse(path.read_text(encoding="utf-8"), filename=str(path))
        for node in ast.walk(tree):
            if _is_os_attribute(node, "getenv") or _is_os_attribute(node, "environ"):
                offenders.append(f"{path.name}:{node.lineno}")
            if isinstance(node, ast.ImportFrom) and node.module == "os":
                names = {alias.name for alias in node.names}
                if names & {"getenv", "environ"}:
                    offenders.append(f"{path.name}:{node.lineno} (from os import ...)")

    assert not offenders, "Environment access found:\n" + "\n".join(offenders)


def test_every_flag_is_a_config_key() -> None:
    known = {key.value for key in ConfigKey}
    parser = build_parser()
    subparsers = next(action for action in parser._actions if isinstance(action, argparse._SubParsersAction))

    unknown: list[str] = []
    for name, subparser in subparsers.choices.items():
        for action in subparser._actions:
            if action.dest in {"help", "config"}:
                continue
            if action.dest not in known:
                unknown.append(f"{name}: {action.dest}")

    assert not unknown, "Flags without a config key:\n" + "\n".join(unknown)
