"""JSON and CSV encodings for states, maps, specs and reports.

Complex matrices are flat row-major lists of ``[re, im]`` pairs.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Sequence

import numpy as np

from .classicality import CCSpec, CQSpec
from .qstate import DensityOperator, StateError
from .structures import StructureMap, bipartite

CSV_COLUMNS = (
    "scenario", "fixture", "map", "I", "J_a", "J_b", "D_a", "D_b", "D",
    "negativity", "residual6", "residual9", "seed",
)


def encode_matrix(m: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(m, dtype=complex).reshape(-1)]


def decode_matrix(entries: Sequence, rows: int, cols: int | None = None, what: str = "matrix") -> np.ndarray:
    cols = rows if cols is None else cols
    try:
        flat = np.array([complex(float(re), float(im)) for re, im in entries], dtype=complex)
    except (TypeError, ValueError):
        raise StateError(f"{what}: entries must be [re, im] number pairs") from None
    if flat.size != rows * cols:
        raise StateError(f"{what}: expected {rows * cols} entries for a {rows}x{cols} matrix, got {flat.size}")
    return flat.reshape(rows, cols)


def state_to_json(rho: DensityOperator) -> dict:
    return {"dims": list(rho.dims), "matrix": encode_matrix(rho.matrix)}


def state_from_json(obj: dict) -> DensityOperator:
    """Load and validate; errors name the violated invariant."""
    if not isinstance(obj, dict) or "dims" not in obj or "matrix" not in obj:
        raise StateError("state JSON needs 'dims' and 'matrix' keys")
    dims = tuple(int(d) for d in obj["dims"])
    d = int(np.prod(dims)) if dims else 0
    m = decode_matrix(obj["matrix"], d, what="state matrix")
    return DensityOperator(dims, m)


def map_to_json(smap: StructureMap) -> dict:
    return {
        "target_dims": list(smap.target_dims),
        "unitary": encode_matrix(smap.unitary),
        "source_dims": list(smap.source.dims),
        "name": smap.name,
    }


def map_from_json(obj: dict, source_dims: Sequence[int] | None = None) -> StructureMap:
    if "target_dims" not in obj or "unitary" not in obj:
        raise StateError("structure map JSON needs 'target_dims' and 'unitary' keys")
    target = tuple(int(d) for d in obj["target_dims"])
    d = int(np.prod(target))
    u = decode_matrix(obj["unitary"], d, what="unitary")
    src = tuple(obj.get("source_dims") or source_dims or target)
    return StructureMap(bipartite(src), target, u, obj.get("name", "custom"))


def spec_to_json(spec: CQSpec | CCSpec) -> dict:
    if isinstance(spec, CCSpec):
        return {
            "kind": "cc",
            "probs": spec.probs.tolist(),
            "basis_a": encode_matrix(spec.basis_a),
            "basis_b": encode_matrix(spec.basis_b),
        }
    out = {
        "kind": "cq",
        "classical_side": spec.classical_side,
        "probs": spec.probs.tolist(),
        "classical_basis": encode_matrix(spec.classical_basis),
        "conditional_states": [state_to_json(s) for s in spec.conditional_states],
    }
    if spec.ensembles is not None:
        out["ensembles"] = [
            {"weights": w.tolist(), "kets": encode_matrix(chi)} for w, chi in spec.ensembles
        ]
    return out


def spec_from_json(obj: dict) -> CQSpec | CCSpec:
    kind = obj.get("kind")
    if kind == "cc":
        p = np.asarray(obj["probs"], dtype=float)
        if p.ndim != 2:
            raise StateError("cc spec 'probs' must be a matrix")
        da, db = p.shape
        ba = decode_matrix(obj["basis_a"], da, what="basis_a") if "basis_a" in obj else None
        bb = decode_matrix(obj["basis_b"], db, what="basis_b") if "basis_b" in obj else None
        return CCSpec(p, ba, bb)
    if kind == "cq":
        p = np.asarray(obj["probs"], dtype=float)
        states = tuple(state_from_json(s) for s in obj["conditional_states"])
        basis = decode_matrix(obj["classical_basis"], p.size, what="classical_basis") if "classical_basis" in obj else None
        ens = None
        if "ensembles" in obj:
            ens = []
            dq = states[0].dim
            for e in obj["ensembles"]:
                w = np.asarray(e["weights"], dtype=float)
                ens.append((w, decode_matrix(e["kets"], dq, w.size, what="ensemble kets")))
            ens = tuple(ens)
        return CQSpec(p, states, basis, int(obj.get("classical_side", 0)), ens)
    raise StateError(f"spec JSON 'kind' must be 'cc' or 'cq', got {kind!r}")


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_matrix(obj)
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def dumps(obj: Any) -> str:
    """Deterministic JSON text (sorted keys, fixed float repr)."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def report_row(scenario: str, fixture: str, map_name: str, report: dict | None, seed: int,
               residual6: float | None = None, residual9: float | None = None) -> dict:
    row = dict.fromkeys(CSV_COLUMNS, "")
    row.update(scenario=scenario, fixture=fixture, map=map_name, seed=seed)
    if report is not None:
        row.update(
            I=report["mutual_info"],
            J_a=report["classical_corr_measured_on_a"],
            J_b=report["classical_corr_measured_on_b"],
            D_a=report["discord_measured_on_a"],
            D_b=report["discord_measured_on_b"],
            D=report["two_way_discord"],
            negativity=report["negativity"],
        )
    if residual6 is not None:
        row["residual6"] = residual6
    if residual9 is not None:
        row["residual9"] = residual9
    return row


def rows_to_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in row.items()})
    return buf.getvalue()
