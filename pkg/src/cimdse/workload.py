"""GEMM workload construction from LLM model descriptions.

Only the Q/K/V projections of the prefill stage are modeled: per layer one
(batch*seq_len) x hidden x hidden GEMM repeated three times.  The workload
file format admits arbitrary GEMM lists, so fuller model descriptions can
be supplied externally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .array_scheduler import GemmSpec, SimMode, SimResult, ZERO_RESULT, simulate
from .errors import ParseError


@dataclass(frozen=True)
class ModelDesc:
    name: str
    layers: int
    hidden_dim: int
    seq_len: int
    batch: int = 1
    stage: str = "prefill"

    def __post_init__(self):
        for f in ("layers", "hidden_dim", "seq_len", "batch"):
            if getattr(self, f) < 1:
                raise ValueError(f"{f} must be >= 1")
        if self.stage != "prefill":
            raise ValueError("only the prefill stage is modeled")


@dataclass(frozen=True)
class GemmWorkload:
    """Ordered (GemmSpec, repeat) list with a consistency-checked MAC total."""

    items: tuple[tuple[GemmSpec, int], ...]
    total_macs: int = field(default=0)

    def __post_init__(self):
        recomputed = sum(g.macs * rep for g, rep in self.items)
        if self.total_macs == 0:
            object.__setattr__(self, "total_macs", recomputed)
        elif self.total_macs != recomputed:
            raise ValueError(
                f"total_macs {self.total_macs} != recomputed {recomputed}")


def qkv_workload(model: ModelDesc) -> GemmWorkload:
    """Prefill-stage QKV projections: one GEMM per layer, repeated 3x."""
    gemm = GemmSpec(M=model.batch * model.seq_len,
                    N=model.hidden_dim, K=model.hidden_dim)
    return GemmWorkload(items=((gemm, 3 * model.layers),))


def _split_n(n: int, cores: int) -> list[int]:
    # near-equal chunks: the first n % cores chunks get the extra column
    q, r = divmod(n, cores)
    return [q + 1 if i < r else q for i in range(cores)]


def partition_cores(wl: GemmWorkload, cores: int) -> list[GemmWorkload]:
    """Split the N dimension of every GEMM into `cores` near-equal chunks."""
    if cores < 1:
        raise ValueError("cores must be >= 1")
    if cores == 1:
        return [wl]
    per_core: list[list[tuple[GemmSpec, int]]] = [[] for _ in range(cores)]
    for gemm, rep in wl.items:
        for i, chunk in enumerate(_split_n(gemm.N, cores)):
            if chunk > 0:
                per_core[i].append((GemmSpec(gemm.M, chunk, gemm.K), rep))
    return [GemmWorkload(items=tuple(items)) for items in per_core if items]


def simulate_workload(wl: GemmWorkload, point, mode: SimMode = "paper") -> SimResult:
    """Aggregate simulation of a workload on all cores of a design point.

    Each core runs its N-partition serially over the (repeated) GEMM list;
    cores run in parallel, so total_cycles is the slowest core and the
    activity counters sum across cores.
    """
    parts = partition_cores(wl, point.array.cores)
    merged = ZERO_RESULT
    worst = 0
    for core_wl in parts:
        core = ZERO_RESULT
        for gemm, rep in core_wl.items:
            one = simulate(gemm, point, mode)
            core = core.merged_with(_scaled(one, rep), serial=True)
        worst = max(worst, core.total_cycles)
        merged = merged.merged_with(core, serial=True)
    return SimResult(
        total_cycles=worst,
        macs_executed=merged.macs_executed,
        weight_rows_written=merged.weight_rows_written,
        idle_macro_cycles=merged.idle_macro_cycles,
        activation_transfers=merged.activation_transfers,
        weight_transfers=merged.weight_transfers,
        output_transfers=merged.output_transfers,
    )


def _scaled(r: SimResult, rep: int) -> SimResult:
    if rep == 1:
        return r
    return SimResult(*(v * rep for v in (
        r.total_cycles, r.macs_executed, r.weight_rows_written,
        r.idle_macro_cycles, r.activation_transfers, r.weight_transfers,
        r.output_transfers)))


# ---------------------------------------------------------------------------
# File formats

def parse_workload(text: str, path: str | None = None) -> GemmWorkload:
    """One GEMM per line: `M,N,K,repeat` (repeat optional), '#' comments."""
    items: list[tuple[GemmSpec, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) not in (3, 4):
            raise ParseError(f"expected M,N,K[,repeat], got {line!r}", path, lineno)
        try:
            nums = [int(p) for p in parts]
        except ValueError:
            raise ParseError(f"non-integer GEMM field in {line!r}", path, lineno) from None
        rep = nums[3] if len(nums) == 4 else 1
        if rep < 1:
            raise ParseError(f"repeat must be >= 1, got {rep}", path, lineno)
        try:
            items.append((GemmSpec(*nums[:3]), rep))
        except ValueError as exc:
            raise ParseError(str(exc), path, lineno) from None
    if not items:
        raise ParseError("workload file contains no GEMMs", path)
    return GemmWorkload(items=tuple(items))


def format_workload(wl: GemmWorkload) -> str:
    lines = ["# M,N,K,repeat"]
    lines.extend(f"{g.M},{g.N},{g.K},{rep}" for g, rep in wl.items)
    return "\n".join(lines) + "\n"


_MODEL_INT_FIELDS = ("layers", "hidden_dim", "seq_len", "batch")


def parse_models(text: str, path: str | None = None) -> list[dict]:
    """Parse blank-line separated model blocks of `key = value` lines.

    Each block must carry the ModelDesc fields; extra design-point keys
    (dataflow, interconnect, OL, LSL, AL, PC, PL, BC, BR, TL, cores) are
    passed through untyped for case-study use.
    """
    blocks: list[dict] = []
    current: dict = {}
    start_line = 1
    for lineno, raw in enumerate(text.splitlines() + [""], start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if current:
                blocks.append(_finish_model_block(current, path, start_line))
                current = {}
            start_line = lineno + 1
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", path, lineno)
        key, _, val = (s.strip() for s in line.partition("="))
        current[key] = val
    if not blocks:
        raise ParseError("models file contains no model blocks", path)
    return blocks


def _finish_model_block(block: dict, path, lineno) -> dict:
    missing = [k for k in ("name", "layers", "hidden_dim", "seq_len") if k not in block]
    if missing:
        raise ParseError(f"model block missing fields: {', '.join(missing)}", path, lineno)
    out = dict(block)
    for key in _MODEL_INT_FIELDS:
        if key in out:
            try:
                out[key] = int(out[key])
            except ValueError:
                raise ParseError(f"{key} must be an integer", path, lineno) from None
    out.setdefault("batch", 1)
    out.setdefault("stage", "prefill")
    return out


def model_from_block(block: dict) -> ModelDesc:
    return ModelDesc(name=block["name"], layers=block["layers"],
                     hidden_dim=block["hidden_dim"], seq_len=block["seq_len"],
                     batch=block["batch"], stage=block["stage"])
