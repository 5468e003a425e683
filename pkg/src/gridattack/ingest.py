"""Reading IEEE test cases (MATPOWER ``.m`` and IEEE Common Data Format).

Only a handful of columns are consumed:

* MATPOWER ``mpc.bus``: ``bus_i`` (col 1), ``type`` (col 2), ``Pd`` (col 3).
* MATPOWER ``mpc.branch``: ``fbus``, ``tbus``, ``r``, ``x`` (cols 1-4) and
  ``status`` (col 11, taken as 1 when the column is absent).
* ``mpc.baseMVA``.
* CDF bus cards: bus number (cols 1-4), then whitespace fields after the
  name: area, zone, type, voltage, angle, load MW.
* CDF branch cards: tap bus, Z bus, area, zone, circuit, type, R, X.
  CDF has no status column, so every branch is in service.
* CDF title card: MVA base in cols 32-37.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .grid import Branch, Bus, BusKind, GridNetwork

FORMATS = ("matpower", "cdf")


class ParseError(ValueError):
    """Malformed case text. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CaseReferenceError(ParseError):
    """A branch names a bus that was never declared."""


@dataclass(frozen=True)
class BusRecord:
    number: int
    index: int
    type_code: int
    pd: float = 0.0


@dataclass(frozen=True)
class BranchRecord:
    from_bus: int
    to_bus: int
    r: float
    x: float
    status: int = 1
    line: int | None = None


@dataclass
class RawCase:
    buses: list[BusRecord]
    branches: list[BranchRecord]
    format: str
    base_mva: float = 100.0
    index_of: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.index_of:
            self.index_of = {b.number: b.index for b in self.buses}


def _to_float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"cannot read number {tok!r}", lineno) from None


def _to_int(tok: str, lineno: int) -> int:
    val = _to_float(tok, lineno)
    if val != int(val):
        raise ParseError(f"expected an integer, got {tok!r}", lineno)
    return int(val)


def _matpower_matrix(lines: list[str], name: str, min_cols: int) -> list[tuple[int, list[str]]]:
    start = re.compile(r"^\s*mpc\." + name + r"\s*=\s*\[")
    rows: list[tuple[int, list[str]]] = []
    inside = False
    for lineno, raw in enumerate(lines, 1):
        text = raw.split("%", 1)[0]
        if not inside:
            m = start.match(text)
            if not m:
                continue
            inside = True
            text = text[m.end():]
        done = "]" in text
        if done:
            text = text.split("]", 1)[0]
        for chunk in text.split(";"):
            toks = chunk.replace(",", " ").split()
            if not toks:
                continue
            if len(toks) < min_cols:
                raise ParseError(f"mpc.{name} row has {len(toks)} columns, need {min_cols}", lineno)
            rows.append((lineno, toks))
        if done:
            return rows
    if inside:
        raise ParseError(f"mpc.{name} matrix is not terminated")
    raise ParseError(f"no mpc.{name} matrix found")


def _parse_matpower(text: str) -> RawCase:
    lines = text.splitlines()
    base = 100.0
    for lineno, raw in enumerate(lines, 1):
        m = re.match(r"^\s*mpc\.baseMVA\s*=\s*([^;%]+)", raw)
        if m:
            base = _to_float(m.group(1).strip(), lineno)
            break
    buses = []
    for lineno, toks in _matpower_matrix(lines, "bus", 3):
        buses.append(
            BusRecord(_to_int(toks[0], lineno), len(buses), _to_int(toks[1], lineno), _to_float(toks[2], lineno))
        )
    branches = []
    for lineno, toks in _matpower_matrix(lines, "branch", 4):
        status = _to_int(toks[10], lineno) if len(toks) > 10 else 1
        branches.append(
            BranchRecord(
                _to_int(toks[0], lineno),
                _to_int(toks[1], lineno),
                _to_float(toks[2], lineno),
                _to_float(toks[3], lineno),
                status,
                lineno,
            )
        )
    return RawCase(buses, branches, "matpower", base)


def _parse_cdf(text: str) -> RawCase:
    lines = text.splitlines()
    base = 100.0
    if lines and len(lines[0]) >= 37 and lines[0][31:37].strip():
        base = _to_float(lines[0][31:37].strip(), 1)
    buses: list[BusRecord] = []
    branches: list[BranchRecord] = []
    section = None
    seen_bus = seen_branch = False
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip()
        upper = line.upper()
        if section is None:
            if upper.startswith("BUS DATA FOLLOWS"):
                section, seen_bus = "bus", True
            elif upper.startswith("BRANCH DATA FOLLOWS"):
                section, seen_branch = "branch", True
            continue
        if line.strip().startswith("-999"):
            section = None
            continue
        if not line.strip():
            continue
        if section == "bus":
            if len(line) < 19:
                raise ParseError("bus card too short", lineno)
            toks = line[18:].split()
            if len(toks) < 6:
                raise ParseError("bus card missing fields", lineno)
            buses.append(
                BusRecord(_to_int(line[:4], lineno), len(buses), _to_int(toks[2], lineno), _to_float(toks[5], lineno))
            )
        else:
            toks = line.split()
            if len(toks) < 8:
                raise ParseError("branch card missing fields", lineno)
            branches.append(
                BranchRecord(
                    _to_int(toks[0], lineno),
                    _to_int(toks[1], lineno),
                    _to_float(toks[6], lineno),
                    _to_float(toks[7], lineno),
                    1,
                    lineno,
                )
            )
    if section is not None:
        raise ParseError(f"{section} section is not terminated by -999")
    if not seen_bus:
        raise ParseError("no BUS DATA section found")
    if not seen_branch:
        raise ParseError("no BRANCH DATA section found")
    return RawCase(buses, branches, "cdf", base)


def parse_case(text: str, format: str = "matpower") -> RawCase:
    """Parse case text into a :class:`RawCase`.

    Parallel branches are kept as separate records; merging happens in
    :func:`to_network`.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown case format {format!r}; expected one of {FORMATS}")
    if not text.strip():
        raise ParseError("empty case file")
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    raw = _parse_matpower(text) if format == "matpower" else _parse_cdf(text)
    if not raw.buses:
        raise ParseError("case declares no buses")
    if len(raw.index_of) != len(raw.buses):
        raise ParseError("duplicate bus numbers")
    for br in raw.branches:
        for end in (br.from_bus, br.to_bus):
            if end not in raw.index_of:
                raise CaseReferenceError(f"branch references undeclared bus {end}", br.line)
        if br.r == 0 and br.x == 0 and br.status:
            raise ParseError(f"branch {br.from_bus}-{br.to_bus} has zero impedance", br.line)
    return raw


def guess_format(path: str | Path) -> str:
    return "matpower" if Path(path).suffix.lower() == ".m" else "cdf"


def read_case(path: str | Path, format: str | None = None) -> RawCase:
    path = Path(path)
    return parse_case(path.read_text(encoding="utf-8"), format or guess_format(path))


def bundled_case_path(name: str) -> Path:
    """Path to a case shipped with the package, e.g. ``"case118"``."""
    stem = name[:-2] if name.endswith(".m") else name
    ref = resources.files("gridattack") / "data" / f"{stem}.m"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled case named {name!r}")
    return Path(str(ref))


def resolve_case(spec: str | Path) -> Path:
    """A file path if it exists, otherwise the name of a bundled case."""
    path = Path(spec)
    if path.exists():
        return path
    return bundled_case_path(str(spec))


def to_network(raw: RawCase, demand: str = "unit") -> GridNetwork:
    """Collapse a raw case into a :class:`GridNetwork` of consumer buses.

    Each in-service branch gets admittance ``1 / |r + jx|``; parallel
    branches between one bus pair are merged by summing admittance and keep
    the orientation and position of their first occurrence. ``demand`` is
    ``"unit"`` (1.0 everywhere) or ``"file"`` (``max(Pd, 0) / baseMVA``).
    """
    if demand not in ("unit", "file"):
        raise ValueError(f"unknown demand mode {demand!r}")
    merged: dict[tuple[int, int], list] = {}
    for br in raw.branches:
        if not br.status:
            continue
        z = math.hypot(br.r, br.x)
        if z == 0:
            raise ParseError(f"branch {br.from_bus}-{br.to_bus} has zero impedance", br.line)
        a, b = raw.index_of[br.from_bus], raw.index_of[br.to_bus]
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key in merged:
            merged[key][2] += 1.0 / z
        else:
            merged[key] = [a, b, 1.0 / z]
    branches = tuple(Branch(k, a, b, y) for k, (a, b, y) in enumerate(merged.values()))
    buses = []
    for rec in raw.buses:
        d = 1.0 if demand == "unit" else max(rec.pd, 0.0) / raw.base_mva
        buses.append(Bus(rec.index, BusKind.CONSUMER, d, str(rec.number)))
    return GridNetwork(tuple(buses), branches)


def generator_count(n: int, fraction: float) -> int:
    """``round(fraction * n)`` with halves rounded up, never below one."""
    return max(1, math.floor(fraction * n + 0.5))


def assign_generators(net: GridNetwork, fraction: float = 0.10, seed: int = 0) -> GridNetwork:
    """Promote a seeded uniform sample of buses to generators at voltage 1.0.

    Buses not chosen keep their demand; buses that were generators before
    revert to consumers with demand 1.0.
    """
    if not (0 < fraction <= 1):
        raise ValueError(f"generator fraction must lie in (0, 1], got {fraction}")
    n = net.n_buses
    chosen = set(np.random.default_rng(seed).choice(n, generator_count(n, fraction), replace=False).tolist())
    buses = []
    for bus in net.buses:
        if bus.id in chosen:
            buses.append(Bus(bus.id, BusKind.GENERATOR, 1.0, bus.label))
        elif bus.is_generator:
            buses.append(Bus(bus.id, BusKind.CONSUMER, 1.0, bus.label))
        else:
            buses.append(bus)
    return net.with_buses(buses)


def load_network(case: str | Path, format: str | None = None, demand: str = "unit") -> GridNetwork:
    return to_network(read_case(resolve_case(case), format), demand)
