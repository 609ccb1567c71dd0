"""Categorization-distance evaluation of gisting as decision support.

Subjects sort the same items into categories.  Two subjects are at distance
0 on an item if they chose the same category and 2 otherwise; the distance
between subjects is the mean over items, and a subject's score is its mean
distance to the control group (leaving itself out if it is a control).
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NONE = "none"
CONTROL = "control"
EXPERIMENTAL = "experimental"
RANDOM = "random"
CONDITIONS = (CONTROL, EXPERIMENTAL, RANDOM)
CSV_HEADER = ["subject", "condition", "item", "category"]


class DataError(ValueError):
    """Malformed or incomplete judgment data."""


def parse_category(value):
    value = str(value).strip()
    if value.lower() == NONE:
        return NONE
    try:
        cat = int(value)
    except ValueError:
        raise DataError(f"category must be a positive integer or 'none', got {value!r}") from None
    if cat < 1:
        raise DataError(f"category must be a positive integer or 'none', got {value!r}")
    return cat


@dataclass
class JudgmentSet:
    items: list
    subjects: list  # (subject id, condition)
    assignment: dict  # (subject id, item) -> category

    def __post_init__(self):
        if not self.items:
            raise DataError("judgment set has no items")
        self._condition = {}
        for sid, cond in self.subjects:
            if sid in self._condition:
                raise DataError(f"subject {sid!r} listed twice")
            self._condition[sid] = cond

    def condition(self, subject):
        return self._condition[subject]

    @property
    def subject_ids(self):
        return [s for s, _ in self.subjects]

    def in_condition(self, condition):
        return [s for s, c in self.subjects if c == condition]

    def vector(self, subject):
        out = []
        for item in self.items:
            try:
                out.append(self.assignment[(subject, item)])
            except KeyError:
                raise DataError(f"no category for subject {subject!r}, item {item!r}") from None
        return out

    def validate(self):
        for sid in self.subject_ids:
            self.vector(sid)
        return self

    def with_subjects(self, subjects, assignment):
        merged = dict(self.assignment)
        merged.update(assignment)
        return JudgmentSet(list(self.items), list(self.subjects) + list(subjects), merged)


def read_judgments(source) -> JudgmentSet:
    """Read ``subject,condition,item,category`` CSV from a path or text stream."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return read_judgments(fh)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != CSV_HEADER:
        raise DataError(f"expected header {','.join(CSV_HEADER)}, got {header}")
    items, subjects, assignment, conds = [], [], {}, {}
    seen_items = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != 4:
            raise DataError(f"line {lineno}: expected 4 fields, got {len(row)}")
        sid, cond, item, cat = (f.strip() for f in row)
        cond = cond.lower()
        if cond not in CONDITIONS:
            raise DataError(f"line {lineno}: unknown condition {cond!r}")
        try:
            cat = parse_category(cat)
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
        if sid not in conds:
            conds[sid] = cond
            subjects.append((sid, cond))
        elif conds[sid] != cond:
            raise DataError(f"line {lineno}: subject {sid!r} appears under two conditions")
        if item not in seen_items:
            seen_items.add(item)
            items.append(item)
        if (sid, item) in assignment and assignment[(sid, item)] != cat:
            raise DataError(f"line {lineno}: subject {sid!r} gave item {item!r} two categories")
        assignment[(sid, item)] = cat
    return JudgmentSet(items, subjects, assignment).validate()


def write_judgments(js: JudgmentSet, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for sid, cond in js.subjects:
        for item in js.items:
            w.writerow([sid, cond, item, js.assignment[(sid, item)]])


# -- distances


def item_distance(cat_a, cat_b) -> int:
    return 0 if cat_a == cat_b else 2


def pairwise_distance(j, k, js: JudgmentSet) -> float:
    a, b = js.vector(j), js.vector(k)
    return sum(item_distance(x, y) for x, y in zip(a, b)) / len(a)


def _others(k, controls):
    others = [j for j in controls if j != k]
    if not controls:
        raise DataError("control group is empty")
    if not others:
        raise DataError(f"subject {k!r} is the only control; its distance to the control group is undefined")
    return others


def mean_distance_to_control(k, controls, js: JudgmentSet) -> float:
    """Mean of ``pairwise_distance(j, k)`` over the controls other than ``k``."""
    others = _others(k, controls)
    return sum(pairwise_distance(j, k, js) for j in others) / len(others)


def distance_matrix(js: JudgmentSet, subjects=None):
    subjects = list(subjects or js.subject_ids)
    codes = {}
    mat = np.array([[codes.setdefault(c, len(codes)) for c in js.vector(s)] for s in subjects])
    d = 2.0 * (mat[:, None, :] != mat[None, :, :]).mean(axis=2)
    return subjects, d


# -- random baseline


def random_baseline(js: JudgmentSet, categories: int = 7, runs: int = 8, seed: int = 0,
                    forced_choice: bool = False, prefix: str = "random") -> JudgmentSet:
    """Add ``runs`` synthetic subjects that pick a category uniformly per item.

    ``categories`` counts the none-of-the-above option, so 7 means piles
    1-6 plus ``none``; with ``forced_choice`` only the piles are drawn.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if categories < 2:
        raise ValueError("need at least two categories")
    choices = list(range(1, categories)) + ([] if forced_choice else [NONE])
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, len(choices), size=(runs, len(js.items)))
    taken = set(js.subject_ids)
    subjects, assignment = [], {}
    n = 0
    for r in range(runs):
        n += 1
        while f"{prefix}-{n}" in taken:
            n += 1
        sid = f"{prefix}-{n}"
        subjects.append((sid, RANDOM))
        for item, d in zip(js.items, draws[r]):
            assignment[(sid, item)] = choices[d]
    return js.with_subjects(subjects, assignment)


# -- confidence intervals


def _item_means(k, controls, js):
    others = _others(k, controls)
    target = js.vector(k)
    rows = [[item_distance(a, b) for a, b in zip(js.vector(j), target)] for j in others]
    return np.asarray(rows, dtype=float).mean(axis=0)


def bootstrap_distribution(per_item, resamples: int, seed: int):
    n = len(per_item)
    if n ** n <= resamples:
        # small enough to use every resample exactly once
        idx = np.array(list(itertools.product(range(n), repeat=n)))
        return per_item[idx].mean(axis=1)
    out = np.empty(resamples)
    for b in range(resamples):
        # one stream per resample index keeps results independent of chunking
        rng = np.random.default_rng([seed, b])
        out[b] = per_item[rng.integers(0, n, n)].mean()
    return out


def bootstrap_ci(k, controls, js: JudgmentSet, level: float = 95.0, resamples: int = 2000, seed: int = 0):
    """Percentile bootstrap over items for ``mean_distance_to_control``.

    When ``resamples`` is at least N**N every ordered resample is used once,
    which gives the exact bootstrap distribution.  The interval is widened,
    if ever needed, to contain the point estimate.
    """
    if resamples < 100:
        raise ValueError("resamples must be at least 100")
    if not 0 < level < 100:
        raise ValueError("level must be a percentage in (0, 100)")
    per_item = _item_means(k, controls, js)
    point = per_item.mean()
    dist = bootstrap_distribution(per_item, resamples, seed)
    tail = (100.0 - level) / 2
    lo, hi = np.percentile(dist, [tail, 100.0 - tail])
    return float(min(lo, point)), float(max(hi, point))


# -- kappa


def kappa_components(a, b, js: JudgmentSet):
    """Observed agreement, chance agreement and whether chance agreement is 1."""
    va, vb = js.vector(a), js.vector(b)
    n = len(va)
    ca, cb = Counter(va), Counter(vb)
    agree = sum(x == y for x, y in zip(va, vb))
    chance = sum(ca[c] * cb[c] for c in ca)
    return agree / n, chance / (n * n), chance == n * n


def cohen_kappa(a, b, js: JudgmentSet) -> float:
    """Cohen's kappa.  With chance agreement 1 the value is 1 if the raters agree, else 0."""
    p_o, p_e, degenerate = kappa_components(a, b, js)
    if degenerate:
        return 1.0 if p_o == 1 else 0.0
    return (p_o - p_e) / (1 - p_e)


# -- report


@dataclass
class Row:
    subject: str
    condition: str
    mean: float
    lo: float
    hi: float
    kappa: float | None = None
    kappa_degenerate: bool = False


@dataclass
class DistanceReport:
    rows: list
    subjects: list
    pairwise: np.ndarray
    level: float
    resamples: int
    kappa: np.ndarray | None = None
    notes: list = field(default_factory=list)

    def by_condition(self):
        groups = {}
        for row in self.rows:
            groups.setdefault(row.condition, []).append(row)
        return groups

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["subject", "condition", "mean_distance", "ci_lo", "ci_hi"]
        with_kappa = self.kappa is not None
        if with_kappa:
            head += ["mean_kappa", "kappa_degenerate"]
        w.writerow(head)
        for r in self.rows:
            line = [r.subject, r.condition, f"{r.mean:.6f}", f"{r.lo:.6f}", f"{r.hi:.6f}"]
            if with_kappa:
                line += [f"{r.kappa:.6f}", int(r.kappa_degenerate)]
            w.writerow(line)
        return buf.getvalue()

    def format_table(self) -> str:
        with_kappa = self.kappa is not None
        head = f"{'subject':<14} {'condition':<13} {'mean':>6}  {f'{self.level:g}% CI':>15}"
        if with_kappa:
            head += f"  {'kappa':>7}"
        lines = [
            f"Mean distance to control group (0 = identical, 2 = always different); "
            f"percentile bootstrap over items, {self.resamples} resamples",
            "",
            head,
            "-" * len(head),
        ]
        for r in self.rows:
            line = f"{r.subject:<14} {r.condition:<13} {r.mean:6.3f}  [{r.lo:6.3f}, {r.hi:6.3f}]"
            if with_kappa:
                line += f"  {r.kappa:7.3f}" + ("*" if r.kappa_degenerate else "")
            lines.append(line)
        groups = self.by_condition()
        order = [c for c in _condition_order(groups)]
        lines += ["", "  ".join(f"{c:>12}" for c in order)]
        depth = max(len(v) for v in groups.values())
        for i in range(depth):
            cells = [f"{groups[c][i].mean:12.2f}" if i < len(groups[c]) else " " * 12 for c in order]
            lines.append("  ".join(cells).rstrip())
        lines += [""] + [f"note: {n}" for n in self.notes]
        return "\n".join(lines).rstrip() + "\n"


def _condition_order(groups):
    known = [c for c in CONDITIONS if c in groups]
    return known + sorted(c for c in groups if c not in CONDITIONS)


def report(js: JudgmentSet, *, level: float = 95.0, resamples: int = 2000, seed: int = 0,
           runs: int = 0, categories: int = 7, forced_choice: bool = False,
           with_kappa: bool = False) -> DistanceReport:
    """Score every subject against the control group.

    Rows are grouped control, experimental, random and sorted by mean
    distance within each group.  ``runs`` > 0 first adds that many random
    subjects.
    """
    controls = js.in_condition(CONTROL)
    if not controls:
        raise DataError("no control subjects in the judgment set")
    if runs:
        js = random_baseline(js, categories, runs, seed, forced_choice)
    notes = []
    rows = []
    for sid, cond in js.subjects:
        if cond == CONTROL and len(controls) < 2:
            raise DataError(f"subject {sid!r} is the only control; need at least two controls")
        mean = mean_distance_to_control(sid, controls, js)
        lo, hi = bootstrap_ci(sid, controls, js, level, resamples, seed)
        row = Row(sid, cond, mean, lo, hi)
        if with_kappa:
            others = [j for j in controls if j != sid]
            vals = []
            for j in others:
                vals.append(cohen_kappa(sid, j, js))
                if kappa_components(sid, j, js)[2]:
                    row.kappa_degenerate = True
            row.kappa = sum(vals) / len(vals)
        rows.append(row)
    groups = {}
    for row in rows:
        groups.setdefault(row.condition, []).append(row)
    ordered = []
    for cond in _condition_order(groups):
        ordered += sorted(groups[cond], key=lambda r: (r.mean, r.subject))
    subjects, pairwise = distance_matrix(js)
    kappa = None
    if with_kappa:
        kappa = np.array([[cohen_kappa(a, b, js) for b in subjects] for a in subjects])
        if any(r.kappa_degenerate for r in rows):
            notes.append("* kappa undefined for some pairs (chance agreement 1); reported by convention")
    if runs:
        notes.append(f"{runs} random subjects, seed {seed}" + (", forced choice" if forced_choice else ""))
    if any(not math.isfinite(r.mean) for r in rows):
        raise DataError("non-finite distance")
    return DistanceReport(ordered, subjects, pairwise, level, resamples, kappa, notes)
