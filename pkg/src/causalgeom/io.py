"""Text formats: machine files, curve/record CSVs and key-value metadata."""

from __future__ import annotations

import csv
import hashlib
import io
from fractions import Fraction
from numbers import Rational
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .machine import Alphabet, DfaType, Machine

ROW_TOL = 1e-9
DIGITS = 17


class MachineFileError(ValueError):
    pass


# ---------------------------------------------------------------------------
# machine files
# ---------------------------------------------------------------------------


def _split_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def parse_machine_text(text: str, source: str = "<string>") -> Machine:
    """Parse the flat key-value machine format.

    Lines are ``key = value``; ``#`` starts a comment.  Repeating a list key
    appends to it.  Example::

        states = 2
        alphabet = 0, 1
        gamma = 0 0 -> 1, 0 1 -> 0, 1 0 -> 1, 1 1 -> 0
        probs = 0 0 = 1/5, 0 1 = 4/5, 1 0 = 3/5, 1 1 = 2/5
    """
    fields: dict[str, list[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MachineFileError(f"{source}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        fields.setdefault(key.strip().lower(), []).append(value.strip())
    for key in ("states", "alphabet", "gamma", "probs"):
        if key not in fields:
            raise MachineFileError(f"{source}: missing field '{key}'")
    try:
        n = int(fields["states"][-1])
    except ValueError:
        raise MachineFileError(f"{source}: 'states' must be an integer") from None
    syms: list[str] = []
    for v in fields["alphabet"]:
        syms.extend(s for part in _split_list(v) for s in part.split())
    alphabet = Alphabet(tuple(syms))

    def state(tok: str) -> int:
        j = int(tok)
        if not 0 <= j < n:
            raise MachineFileError(f"{source}: state {j} out of range 0..{n - 1}")
        return j

    transitions = {}
    for v in fields["gamma"]:
        for item in _split_list(v):
            try:
                lhs, rhs = item.split("->")
                j, a = lhs.split()
                edge = (state(j), alphabet.index(a))
            except (ValueError, KeyError) as exc:
                raise MachineFileError(f"{source}: bad gamma entry {item!r}: {exc}") from None
            if edge in transitions:
                raise MachineFileError(f"{source}: duplicate gamma entry for {item!r}")
            transitions[edge] = state(rhs.strip())
    try:
        dfa = DfaType.from_transitions(n, alphabet, transitions)
    except ValueError as exc:
        raise MachineFileError(f"{source}: {exc}") from None

    probs: dict = {}
    for v in fields["probs"]:
        for item in _split_list(v):
            try:
                lhs, rhs = item.split("=")
                j, a = lhs.split()
                edge = (state(j), alphabet.index(a))
                p = Fraction(rhs.strip())
            except (ValueError, KeyError, ZeroDivisionError) as exc:
                raise MachineFileError(f"{source}: bad probs entry {item!r}: {exc}") from None
            if edge not in dfa.edge_index:
                raise MachineFileError(f"{source}: probability given for undefined edge {item!r}")
            probs[edge] = p
    missing = [e for e in dfa.edges if e not in probs]
    if missing:
        raise MachineFileError(f"{source}: no probability for edges {missing}")
    values = [probs[e] for e in dfa.edges]
    for j in range(n):
        idx = [i for i, (k, _) in enumerate(dfa.edges) if k == j]
        s = sum(values[i] for i in idx)
        if abs(float(s) - 1.0) > ROW_TOL:
            raise MachineFileError(f"{source}: row {j} sums to {float(s)!r}, not 1")
        if s != 1:
            for i in idx:
                values[i] = values[i] / s
    try:
        return Machine(dfa, tuple(values))
    except ValueError as exc:
        raise MachineFileError(f"{source}: {exc}") from None


def read_machine(path) -> Machine:
    path = Path(path)
    return parse_machine_text(path.read_text(encoding="utf-8"), str(path))


def _fmt_prob(p) -> str:
    if isinstance(p, Rational):
        return str(p)
    return repr(float(p))


def format_machine(m: Machine, comment: str | None = None) -> str:
    dfa = m.dfa
    sym = dfa.alphabet.symbols
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"states = {dfa.n_states}")
    lines.append(f"alphabet = {', '.join(sym)}")
    lines.append("gamma = " + ", ".join(f"{j} {sym[a]} -> {dfa.target(j, a)}" for j, a in dfa.edges))
    lines.append("probs = " + ", ".join(f"{j} {sym[a]} = {_fmt_prob(p)}" for (j, a), p in zip(dfa.edges, m.probs)))
    return "\n".join(lines) + "\n"


def write_machine(m: Machine, path, comment: str | None = None) -> Path:
    path = Path(path)
    path.write_text(format_machine(m, comment), encoding="utf-8")
    return path


def shipped_machine_dir() -> Path:
    return Path(__file__).resolve().parent / "data" / "machines"


def shipped_machine(name: str) -> Machine:
    """Load one of the machine files bundled with the package (name without suffix)."""
    path = shipped_machine_dir() / f"{name}.machine"
    if not path.exists():
        known = sorted(p.stem for p in shipped_machine_dir().glob("*.machine"))
        raise FileNotFoundError(f"no shipped machine {name!r}; known: {', '.join(known)}")
    return read_machine(path)


def resolve_machine(spec: str) -> Machine:
    """A path to a machine file, or the name of a shipped one."""
    p = Path(spec)
    if p.exists():
        return read_machine(p)
    return shipped_machine(spec)


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), f".{DIGITS}g")


def edge_labels(dfa: DfaType, prefix: str = "q") -> list[str]:
    return [f"{prefix}_{j}_{dfa.alphabet.symbols[a]}" for j, a in dfa.edges]


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_curve_csv(path, curve, extra: Mapping[str, np.ndarray] | None = None) -> Path:
    """Columns ``t``, one ``q_j_a`` per edge, then optional per-edge extra blocks."""
    header = ["t"] + edge_labels(curve.dfa)
    blocks = []
    for name, arr in (extra or {}).items():
        header += edge_labels(curve.dfa, name)
        blocks.append(np.asarray(arr))
    rows = []
    for i, t in enumerate(curve.times):
        row = [t, *curve.points[i]]
        for b in blocks:
            row.extend(b[i])
        rows.append(row)
    return write_csv(path, header, rows)


def read_curve_csv(path, dfa: DfaType):
    from .geometry import Curve

    header, rows = read_csv(path)
    labels = edge_labels(dfa)
    idx = [header.index(lab) for lab in labels]
    arr = np.array([[float(r[0])] + [float(r[i]) for i in idx] for r in rows])
    return Curve(dfa, arr[:, 0], arr[:, 1:])


def write_meta(path, items: Mapping[str, object]) -> Path:
    path = Path(path)
    lines = [f"{k} = {_meta_value(v)}" for k, v in items.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _meta_value(v) -> str:
    if isinstance(v, (list, tuple)):
        return ", ".join(_meta_value(x) for x in v)
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def read_meta(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if "=" in line and not line.lstrip().startswith("#"):
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def write_flow_curve(path, flow) -> tuple[Path, Path]:
    """FlowCurve CSV plus ``.meta`` sidecar with the same basename."""
    path = Path(path)
    csv_path = write_curve_csv(path, flow.curve, flow.extra)
    meta_path = write_meta(path.with_suffix(".meta"), flow.meta())
    return csv_path, meta_path


def write_chain_record(path, rec) -> Path:
    header = ["generation", "fitness", "offspring_spread"] + edge_labels(rec.dfa)
    rows = [[g, f, s, *p] for g, f, s, p in zip(rec.generation, rec.fitness, rec.spread, rec.points)]
    return write_csv(path, header, rows)


def write_exact_distribution(path, dist) -> Path:
    header = edge_labels(dist.dfa) + ["count_" + lab[2:] for lab in edge_labels(dist.dfa)] + ["probability"]
    rows = []
    for em, p in dist.support:
        probs = ["undefined" if x is None else x for x in em.probs]
        rows.append([*probs, *em.counts, p])
    return write_csv(path, header, rows)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
