"""Design-point data model, validation, and space enumeration/sampling.

A design point joins one macro configuration (storage geometry, bank count,
reduction pipelining, compute-I/O overlap capability) with one array
arrangement (grid shape, dataflow, interconnect, activation tile length,
core count).  Points are immutable and hash to a stable 64-bit id so that
concurrent exploration merges reproducibly.
"""

from __future__ import annotations

import hashlib
import itertools
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .errors import EmptySpaceError, ParseError, ValidationError


class Dataflow(str, Enum):
    WS = "WS"
    OS = "OS"


class Interconnect(str, Enum):
    BROADCAST = "Broadcast"
    SYSTOLIC = "Systolic"


# Candidate sets (macro and array tiers).  TL is a first-class parameter
# even though it is a schedule knob rather than a hardware resource; its
# candidates are powers of two spanning every value used by the bundled
# regression workloads.
AL_CANDIDATES = (8, 16, 32, 64, 128, 256)
LSL_CANDIDATES = (2, 4, 8, 16, 32, 64)
PC_CANDIDATES = (2, 4, 8, 16, 32, 64, 128, 256)
PL_CANDIDATES = (0, 1, 2, 3, 4, 5)
OL_CANDIDATES = (False, True)
WBW_CANDIDATES = (8,)
IBW_CANDIDATES = (8,)
BR_CANDIDATES = tuple(range(1, 65))
BC_CANDIDATES = tuple(range(1, 65))
DATAFLOW_CANDIDATES = (Dataflow.WS, Dataflow.OS)
INTERCONNECT_CANDIDATES = (Interconnect.BROADCAST, Interconnect.SYSTOLIC)
TL_CANDIDATES = (8, 16, 32, 64, 128, 256, 512, 1024)

# Canonical field order, shared by enumeration, serialization and CSV output.
FIELD_NAMES = (
    "AL", "LSL", "PC", "PL", "OL", "WBW", "IBW",
    "BR", "BC", "dataflow", "interconnect", "TL", "cores",
)


@dataclass(frozen=True)
class MacroConfig:
    """One macro: PC banks, each holding LSL weight rows of AL columns."""

    AL: int
    LSL: int
    PC: int
    PL: int
    OL: bool
    WBW: int = 8
    IBW: int = 8
    kappa: float = 1.0  # intrinsic weight-write speed, cycles per PC*WBW row unit

    def __post_init__(self):
        for name in ("AL", "LSL", "PC", "WBW", "IBW"):
            if getattr(self, name) < 1:
                raise ValidationError(name, f"{name} must be a positive integer")
        if self.PL < 0:
            raise ValidationError("PL", "PL must be non-negative")
        if self.IBW % 2 != 0:
            raise ValidationError("IBW", "IBW must be even (two bit-slices per cycle)")
        if self.kappa <= 0:
            raise ValidationError("kappa", "kappa must be positive")

    @property
    def multiplier_count(self) -> int:
        """Bit-wise multipliers per macro: AL*PC*2*(WBW/2) = AL*PC*WBW."""
        return self.AL * self.PC * self.WBW


@dataclass(frozen=True)
class ArrayConfig:
    """Macro array arrangement plus schedule-level knobs."""

    BR: int
    BC: int
    dataflow: Dataflow
    interconnect: Interconnect
    TL: int
    cores: int = 1

    def __post_init__(self):
        for name in ("BR", "BC", "TL", "cores"):
            if getattr(self, name) < 1:
                raise ValidationError(name, f"{name} must be a positive integer")


@dataclass(frozen=True)
class DesignPoint:
    """One full accelerator configuration with a stable derived id."""

    macro: MacroConfig
    array: ArrayConfig
    id: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "id", _derive_id(self))

    def field_values(self) -> dict:
        """Field values keyed by canonical field name."""
        m, a = self.macro, self.array
        return {
            "AL": m.AL, "LSL": m.LSL, "PC": m.PC, "PL": m.PL, "OL": m.OL,
            "WBW": m.WBW, "IBW": m.IBW,
            "BR": a.BR, "BC": a.BC,
            "dataflow": a.dataflow.value, "interconnect": a.interconnect.value,
            "TL": a.TL, "cores": a.cores,
        }


def _derive_id(point: DesignPoint) -> int:
    # sha256 of the canonical field tuple (kappa included so non-default
    # write speeds hash apart); 64 bits is plenty for injectivity over the
    # enumerable space.
    values = point.field_values()
    canon = "|".join(f"{k}={values[k]}" for k in FIELD_NAMES)
    canon += f"|kappa={point.macro.kappa!r}"
    return int(hashlib.sha256(canon.encode()).hexdigest()[:16], 16)


def _check_member(field_name: str, value, candidates) -> None:
    if value not in candidates:
        if len(candidates) == 1:
            raise ValidationError(field_name, f"{field_name} must be {candidates[0]}")
        raise ValidationError(
            field_name,
            f"{field_name} not in {{{candidates[0]}..{candidates[-1]}}}: got {value}",
        )


def validate(point: DesignPoint) -> DesignPoint:
    """Return the point unchanged iff every field is in its candidate set."""
    m, a = point.macro, point.array
    _check_member("AL", m.AL, AL_CANDIDATES)
    _check_member("LSL", m.LSL, LSL_CANDIDATES)
    _check_member("PC", m.PC, PC_CANDIDATES)
    _check_member("PL", m.PL, PL_CANDIDATES)
    _check_member("WBW", m.WBW, WBW_CANDIDATES)
    _check_member("IBW", m.IBW, IBW_CANDIDATES)
    _check_member("BR", a.BR, BR_CANDIDATES)
    _check_member("BC", a.BC, BC_CANDIDATES)
    _check_member("TL", a.TL, TL_CANDIDATES)
    if a.cores < 1:
        raise ValidationError("cores", "cores must be >= 1")
    return point


@dataclass(frozen=True)
class SpaceSpec:
    """Candidate subsets for every design-point field.

    The default spec is the full macro+array candidate table with TL pinned
    to its smallest value and a single core, which is the canonical
    enumeration space.  ``restrict`` produces narrowed copies for search.
    """

    AL: tuple = AL_CANDIDATES
    LSL: tuple = LSL_CANDIDATES
    PC: tuple = PC_CANDIDATES
    PL: tuple = PL_CANDIDATES
    OL: tuple = OL_CANDIDATES
    WBW: tuple = WBW_CANDIDATES
    IBW: tuple = IBW_CANDIDATES
    BR: tuple = BR_CANDIDATES
    BC: tuple = BC_CANDIDATES
    dataflow: tuple = DATAFLOW_CANDIDATES
    interconnect: tuple = INTERCONNECT_CANDIDATES
    TL: tuple = (TL_CANDIDATES[0],)
    cores: tuple = (1,)
    kappa: float = 1.0

    def size(self) -> int:
        n = 1
        for name in FIELD_NAMES:
            n *= len(getattr(self, name))
        return n

    def restrict(self, **kwargs) -> "SpaceSpec":
        """Copy with the given fields replaced by new candidate tuples."""
        clean = {}
        for key, value in kwargs.items():
            if key not in FIELD_NAMES and key != "kappa":
                raise ValidationError(key, f"unknown design-space field {key!r}")
            if key == "kappa":
                clean[key] = float(value)
            else:
                clean[key] = tuple(value) if isinstance(value, (list, tuple)) else (value,)
        return replace(self, **clean)

    def build(self, values: dict) -> DesignPoint:
        macro = MacroConfig(
            AL=values["AL"], LSL=values["LSL"], PC=values["PC"], PL=values["PL"],
            OL=values["OL"], WBW=values["WBW"], IBW=values["IBW"], kappa=self.kappa,
        )
        array = ArrayConfig(
            BR=values["BR"], BC=values["BC"], dataflow=Dataflow(values["dataflow"]),
            interconnect=Interconnect(values["interconnect"]),
            TL=values["TL"], cores=values["cores"],
        )
        return DesignPoint(macro=macro, array=array)

    def points(self, filter: Optional[Callable[[DesignPoint], bool]] = None) -> Iterator[DesignPoint]:
        """Yield every combination once, in canonical field order."""
        axes = [getattr(self, name) for name in FIELD_NAMES]
        for combo in itertools.product(*axes):
            point = self.build(dict(zip(FIELD_NAMES, combo)))
            if filter is None or filter(point):
                yield point

    def sample(self, n: int, seed: int) -> list[DesignPoint]:
        if n < 1:
            raise ValueError("sample size must be >= 1")
        rng = random.Random(seed)
        out = []
        for _ in range(n):
            values = {name: rng.choice(getattr(self, name)) for name in FIELD_NAMES}
            out.append(self.build(values))
        return out


#: Space with TL varied over its full candidate set, used for sampling.
FULL_SPACE = SpaceSpec(TL=TL_CANDIDATES)


def enumerate_space(
    filter: Optional[Callable[[DesignPoint], bool]] = None,
    space: Optional[SpaceSpec] = None,
) -> Iterator[DesignPoint]:
    """Lazy stream over the canonical space (or a restricted one)."""
    return (space or SpaceSpec()).points(filter)


def sample_space(n: int, seed: int, space: Optional[SpaceSpec] = None) -> list[DesignPoint]:
    """n uniformly sampled valid points; identical (n, seed) -> identical lists."""
    return (space or FULL_SPACE).sample(n, seed)


# ---------------------------------------------------------------------------
# Structured-text serialization (key = value records, '#' comments)

_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False}


def point_to_record(point: DesignPoint) -> dict[str, str]:
    values = point.field_values()
    rec = {}
    for name in FIELD_NAMES:
        v = values[name]
        rec[name] = str(v).lower() if isinstance(v, bool) else str(v)
    return rec


def format_point(point: DesignPoint) -> str:
    rec = point_to_record(point)
    return "\n".join(f"{k} = {rec[k]}" for k in FIELD_NAMES) + "\n"


def parse_point(text: str, path: str | None = None, kappa: float = 1.0) -> DesignPoint:
    """Parse one flat key-value design-point record."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", path, lineno)
        key, _, val = (s.strip() for s in line.partition("="))
        if key not in FIELD_NAMES:
            raise ParseError(f"unknown design-point field {key!r}", path, lineno)
        values[key] = _parse_field(key, val, path, lineno)
    missing = [k for k in FIELD_NAMES if k not in values]
    if missing:
        raise ParseError(f"missing design-point fields: {', '.join(missing)}", path)
    return point_values_to_point(values, kappa=kappa)


def point_values_to_point(values: dict, kappa: float = 1.0) -> DesignPoint:
    macro = MacroConfig(
        AL=values["AL"], LSL=values["LSL"], PC=values["PC"], PL=values["PL"],
        OL=values["OL"], WBW=values["WBW"], IBW=values["IBW"], kappa=kappa,
    )
    array = ArrayConfig(
        BR=values["BR"], BC=values["BC"], dataflow=Dataflow(values["dataflow"]),
        interconnect=Interconnect(values["interconnect"]),
        TL=values["TL"], cores=values["cores"],
    )
    return DesignPoint(macro=macro, array=array)


def _parse_field(key: str, val: str, path, lineno):
    if key == "OL":
        if val.lower() not in _BOOL_WORDS:
            raise ParseError(f"OL must be true/false, got {val!r}", path, lineno)
        return _BOOL_WORDS[val.lower()]
    if key == "dataflow":
        try:
            return Dataflow(val)
        except ValueError:
            raise ParseError(f"dataflow must be WS or OS, got {val!r}", path, lineno) from None
    if key == "interconnect":
        try:
            return Interconnect(val)
        except ValueError:
            raise ParseError(
                f"interconnect must be Broadcast or Systolic, got {val!r}", path, lineno
            ) from None
    try:
        return int(val)
    except ValueError:
        raise ParseError(f"{key} must be an integer, got {val!r}", path, lineno) from None


def parse_space_file(text: str, path: str | None = None) -> SpaceSpec:
    """Parse a space-restriction file: `field = v1, v2, ...` lines.

    Unlisted fields keep their full candidate sets (TL included, so a
    restriction file can sweep TL).
    """
    spec = FULL_SPACE
    seen: dict[str, tuple] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'field = v1, v2, ...', got {line!r}", path, lineno)
        key, _, vals = (s.strip() for s in line.partition("="))
        if key == "kappa":
            spec = spec.restrict(kappa=float(vals))
            continue
        if key not in FIELD_NAMES:
            raise ParseError(f"unknown design-space field {key!r}", path, lineno)
        parsed = tuple(_parse_field(key, v.strip(), path, lineno) for v in vals.split(","))
        seen[key] = parsed
    spec = spec.restrict(**seen) if seen else spec
    if spec.size() == 0:
        raise EmptySpaceError("space restriction leaves no candidates")
    return spec
