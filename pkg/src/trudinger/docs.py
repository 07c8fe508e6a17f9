"""Coverage lint for the math-to-code table in docs/math_to_code.md.

Every public top-level function or class of the numerical modules must have
a row whose first cell is ``module.name`` in backticks, and every such row
must point at something that exists (``module.Class.method`` is allowed).
"""

import ast
import re
from dataclasses import dataclass, field
from pathlib import Path

MATH_MODULES = ("geometry", "model", "discretization", "stepper", "solver", "estimates", "verification")

# pure plumbing: containers, registries glue and small helpers with no mathematical counterpart
PLUMBING = frozenset({
    "discretization.boundary_from_tag",
    "solver.step_problem",
    "verification.sample_oracle",
})

TABLE = Path("docs") / "math_to_code.md"
_ROW = re.compile(r"^\|\s*`([A-Za-z_][\w.]*)`\s*\|")


@dataclass
class LintReport:
    missing: list = field(default_factory=list)
    stale: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.missing and not self.stale


def _package_dir(root):
    root = Path(root)
    for cand in (root / "src" / "trudinger", root / "trudinger", root):
        if (cand / "solver.py").is_file():
            return cand
    raise FileNotFoundError(f"no trudinger package under {root}")


def code_symbols(pkg_dir):
    """{'module.name': {method names}} for public top-level defs of the numerical modules."""
    out = {}
    for mod in MATH_MODULES:
        tree = ast.parse((Path(pkg_dir) / f"{mod}.py").read_text(encoding="utf-8"))
        for node in tree.body:
            if isinstance(node, (ast.FunctionDef, ast.ClassDef)) and not node.name.startswith("_"):
                methods = set()
                if isinstance(node, ast.ClassDef):
                    methods = {n.name for n in node.body if isinstance(n, ast.FunctionDef)}
                out[f"{mod}.{node.name}"] = methods
    return out


def table_entries(text):
    return [m.group(1) for line in text.splitlines() if (m := _ROW.match(line.strip()))]


def doc_coverage_lint(root=".", table_text=None):
    """Compare the table with the code; ``table_text`` overrides the file contents."""
    root = Path(root)
    symbols = code_symbols(_package_dir(root))
    if table_text is None:
        path = root / TABLE
        table_text = path.read_text(encoding="utf-8") if path.is_file() else ""
    entries = table_entries(table_text)
    listed = set(entries)
    report = LintReport()
    report.missing = sorted(s for s in symbols if s not in listed and s not in PLUMBING)
    for e in entries:
        parts = e.split(".")
        if len(parts) == 2 and e in symbols:
            continue
        if len(parts) == 3 and f"{parts[0]}.{parts[1]}" in symbols and parts[2] in symbols[f"{parts[0]}.{parts[1]}"]:
            continue
        report.stale.append(e)
    return report
