"""Loading, validating, classifying, and splitting word-problem records."""

from __future__ import annotations

import enum
import json
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import equation
from .preprocess import normalize_digits, normalize_text


class DatasetError(ValueError):
    """Malformed dataset content; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class MwpRecord:
    """One word problem paired with its gold equation and optional answer."""

    id: str
    problem_text: str
    equation_text: str
    answer: Fraction | None = None


class EquationClass(enum.Enum):
    SIMPLE_ADD = "add"
    SIMPLE_SUB = "sub"
    SIMPLE_MUL = "mul"
    SIMPLE_DIV = "div"
    COMPLEX = "complex"
    NOOP = "noop"  # bare literal, e.g. "x = 5"


_SIMPLE_BY_OP = {
    equation.Op.ADD: EquationClass.SIMPLE_ADD,
    equation.Op.SUB: EquationClass.SIMPLE_SUB,
    equation.Op.MUL: EquationClass.SIMPLE_MUL,
    equation.Op.DIV: EquationClass.SIMPLE_DIV,
}


def classify_equation(eq: equation.Equation) -> EquationClass:
    """Simple(op) for exactly one operator, Complex for two or more, NoOp
    for a bare literal."""
    counts = equation.count_operators(eq.rhs)
    total = sum(counts.values())
    if total == 0:
        return EquationClass.NOOP
    if total == 1:
        op = next(op for op, c in counts.items() if c == 1)
        return _SIMPLE_BY_OP[op]
    return EquationClass.COMPLEX


@dataclass
class TypeCounts:
    add: int = 0
    sub: int = 0
    mul: int = 0
    div: int = 0
    complex: int = 0
    noop: int = 0
    total: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "add": self.add,
            "sub": self.sub,
            "mul": self.mul,
            "div": self.div,
            "complex": self.complex,
            "noop": self.noop,
            "total": self.total,
        }


def summarize(records: Sequence[MwpRecord]) -> TypeCounts:
    """Count records per equation class. Unparseable equations are an error."""
    counts = TypeCounts()
    for rec in records:
        try:
            eq = equation.parse_equation(rec.equation_text)
        except equation.ParseError as exc:
            raise DatasetError(f"record {rec.id!r}: unparseable equation: {exc}") from exc
        cls = classify_equation(eq)
        setattr(counts, cls.value, getattr(counts, cls.value) + 1)
        counts.total += 1
    return counts


# --- validation --------------------------------------------------------

ERROR, WARNING = "error", "warning"


@dataclass(frozen=True)
class Issue:
    severity: str  # ERROR or WARNING
    code: str
    message: str


_NUMBER_RE = re.compile(r"[0-9]+(?:\.[0-9]+)?")


def _numbers_in_text(text: str) -> set[Fraction]:
    ascii_text = normalize_digits(text, "bengali_to_ascii")
    return {Fraction(m.group()) for m in _NUMBER_RE.finditer(ascii_text)}


def _numbers_in_expr(e: equation.Expr) -> set[Fraction]:
    if isinstance(e, equation.Num):
        return {e.value}
    return _numbers_in_expr(e.left) | _numbers_in_expr(e.right)


def validate_record(rec: MwpRecord) -> list[Issue]:
    """Check a record against the annotation rules.

    Parse failures, unsolvable equations, answer mismatches, and empty
    problem text are error-severity; equation numerals missing from the
    problem text are warnings (numbers may be spelled out in words).
    """
    issues: list[Issue] = []
    if not normalize_text(rec.problem_text):
        issues.append(Issue(ERROR, "empty_problem", "problem text is empty after normalization"))
    try:
        eq = equation.parse_equation(rec.equation_text)
    except equation.ParseError as exc:
        issues.append(Issue(ERROR, "equation_parse", str(exc)))
        return issues
    missing = _numbers_in_expr(eq.rhs) - _numbers_in_text(rec.problem_text)
    if missing:
        shown = ", ".join(equation.format_number(v) for v in sorted(missing))
        issues.append(Issue(WARNING, "numeral_mismatch", f"equation numerals not in problem text: {shown}"))
    try:
        value = equation.solve(eq)
    except equation.DivisionByZero as exc:
        issues.append(Issue(ERROR, "equation_unsolvable", str(exc)))
        return issues
    if rec.answer is not None and value != rec.answer:
        issues.append(
            Issue(ERROR, "answer_mismatch", f"equation solves to {value}, stored answer is {rec.answer}")
        )
    return issues


# --- splitting ----------------------------------------------------------


@dataclass
class DatasetSplit:
    train: list[MwpRecord]
    validation: list[MwpRecord]
    test: list[MwpRecord]
    seed: int = 0

    def parts(self) -> tuple[list[MwpRecord], list[MwpRecord], list[MwpRecord]]:
        return self.train, self.validation, self.test


def _as_fraction(r) -> Fraction:
    if isinstance(r, float):
        return Fraction(str(r))
    return Fraction(r)


def allocate_counts(n: int, proportions: Sequence[Fraction]) -> list[int]:
    """Largest-remainder apportionment of ``n`` items; ties favor earlier
    entries (train before validation before test)."""
    exact = [n * p for p in proportions]
    base = [int(e) for e in exact]
    leftover = n - sum(base)
    order = sorted(range(len(exact)), key=lambda i: (-(exact[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def split_dataset(
    records: Sequence[MwpRecord],
    seed: int,
    ratios: Sequence[Fraction | float | str] = (Fraction(8, 10), Fraction(1, 10), Fraction(1, 10)),
) -> DatasetSplit:
    """Shuffle with a seeded PRNG and partition by the given ratios.

    The same seed and input always produce the identical partition.
    """
    if len(ratios) != 3:
        raise ValueError("ratios must have exactly three entries")
    fracs = [_as_fraction(r) for r in ratios]
    if sum(fracs) != 1:
        raise ValueError(f"ratios must sum to 1, got {[str(f) for f in fracs]}")
    if not records:
        raise ValueError("cannot split an empty record list")
    shuffled = list(records)
    random.Random(seed).shuffle(shuffled)
    n_train, n_val, _ = allocate_counts(len(shuffled), fracs)
    return DatasetSplit(
        train=shuffled[:n_train],
        validation=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
        seed=seed,
    )


# --- file formats -------------------------------------------------------


def _parse_answer(value) -> Fraction:
    if isinstance(value, bool):
        raise ValueError(f"bad answer value: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (float, str)):
        return Fraction(str(value))
    raise ValueError(f"bad answer value: {value!r}")


def load_dataset(path: str | Path, format: str = "jsonl") -> list[MwpRecord]:
    """Read records from a JSONL or two-column TSV file.

    Missing ids default to the 1-based line number; duplicate ids and
    malformed lines raise :class:`DatasetError` naming the line.
    """
    if format not in ("jsonl", "tsv"):
        raise ValueError(f"unknown format: {format!r}")
    text = Path(path).read_text(encoding="utf-8")
    records: list[MwpRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        if format == "jsonl":
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict) or "problem" not in obj or "equation" not in obj:
                raise DatasetError("object must have 'problem' and 'equation' keys", line=lineno)
            rec_id = str(obj.get("id", lineno))
            answer = None
            if obj.get("answer") is not None:
                try:
                    answer = _parse_answer(obj["answer"])
                except (ValueError, ZeroDivisionError) as exc:
                    raise DatasetError(f"bad answer: {exc}", line=lineno) from exc
            rec = MwpRecord(rec_id, str(obj["problem"]), str(obj["equation"]), answer)
        else:
            cols = line.split("\t")
            if len(cols) != 2:
                raise DatasetError(f"expected 2 tab-separated columns, found {len(cols)}", line=lineno)
            rec = MwpRecord(str(lineno), cols[0], cols[1], None)
        if rec.id in seen:
            raise DatasetError(f"duplicate id {rec.id!r}", line=lineno)
        seen.add(rec.id)
        records.append(rec)
    return records


def save_dataset(records: Sequence[MwpRecord], path: str | Path) -> None:
    """Write records as UTF-8 JSONL with keys id/problem/equation/answer."""
    lines = []
    for rec in records:
        obj: dict[str, str] = {"id": rec.id, "problem": rec.problem_text, "equation": rec.equation_text}
        if rec.answer is not None:
            obj["answer"] = str(rec.answer)
        lines.append(json.dumps(obj, ensure_ascii=False))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
