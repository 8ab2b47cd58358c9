"""Text and JSON serialization.

Three file formats live here:

* the complex-matrix dump (`complex-matrix v1 <rows> <cols>` header, one
  `<re> <im>` line per entry in row-major order, 17 significant digits,
  bit-exact round trip);
* density-matrix files (`density-matrix v1 <k>` + k rows of `re,im` entries,
  or `spectrum v1 <k>` + k weights), validated on load;
* JSON-lines result records (keys sorted lexicographically, one record per
  line) with CSV and plain-text renderings for tabular payloads.
"""

from __future__ import annotations

import io
import json
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .gap import DensityMatrix, density_matrix_from_hermitian, make_density_matrix

MATRIX_MAGIC = "complex-matrix"
DENSITY_MAGIC = "density-matrix"
SPECTRUM_MAGIC = "spectrum"
FORMAT_VERSION = "v1"

CURVE_CSV_HEADER = "n,trials,successes,p_hat,ci_low,ci_high"


class FormatUnsupportedError(ValueError):
    """The requested output format cannot represent this payload."""


@contextmanager
def _open_for(dest, mode: str):
    if isinstance(dest, (str, Path)):
        with open(dest, mode, encoding="utf-8") as fobj:
            yield fobj
    else:
        yield dest


def _fmt(x: float) -> str:
    # fixed 17 significant digits: bit-exact round trip for the matrix dump
    return f"{x:.17g}"


def _csv_num(x: float) -> str:
    # shortest round-trip repr: still exact on parse, readable in tables
    return repr(float(x))


def save_complex_matrix(matrix: np.ndarray, dest) -> None:
    """Dump a complex matrix in the v1 text format (bit-exact round trip)."""
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError("expected a matrix")
    rows, cols = m.shape
    with _open_for(dest, "w") as f:
        f.write(f"{MATRIX_MAGIC} {FORMAT_VERSION} {rows} {cols}\n")
        for value in m.ravel(order="C"):
            f.write(f"{_fmt(value.real)} {_fmt(value.imag)}\n")


def load_complex_matrix(src) -> np.ndarray:
    """Read a v1 complex-matrix dump."""
    with _open_for(src, "r") as f:
        header = f.readline().split()
        if len(header) != 4 or header[0] != MATRIX_MAGIC or header[1] != FORMAT_VERSION:
            raise ValueError(f"bad complex-matrix header: {header!r}")
        rows, cols = int(header[2]), int(header[3])
        if rows < 1 or cols < 1:
            raise ValueError("matrix dimensions must be positive")
        flat = np.empty(rows * cols, dtype=np.complex128)
        for idx in range(rows * cols):
            parts = f.readline().split()
            if len(parts) != 2:
                raise ValueError(f"bad matrix line {idx + 2}: expected '<re> <im>'")
            flat[idx] = complex(float(parts[0]), float(parts[1]))
    return flat.reshape(rows, cols)


def save_density_matrix(rho: DensityMatrix, dest, form: str = "matrix") -> None:
    """Write a density matrix as entries (`matrix`) or weights (`spectrum`)."""
    with _open_for(dest, "w") as f:
        if form == "matrix":
            k = rho.dim
            f.write(f"{DENSITY_MAGIC} {FORMAT_VERSION} {k}\n")
            for i in range(k):
                f.write(
                    " ".join(
                        f"{_fmt(rho.matrix[i, j].real)},{_fmt(rho.matrix[i, j].imag)}"
                        for j in range(k)
                    )
                    + "\n"
                )
        elif form == "spectrum":
            f.write(f"{SPECTRUM_MAGIC} {FORMAT_VERSION} {rho.dim}\n")
            for w in rho.weights:
                f.write(f"{_fmt(float(w))}\n")
        else:
            raise ValueError(f"unknown density-matrix form {form!r}")


def load_density_matrix(src) -> DensityMatrix:
    """Read either density-matrix file form, with full validation applied."""
    with _open_for(src, "r") as f:
        header = f.readline().split()
        if len(header) != 3 or header[1] != FORMAT_VERSION:
            raise ValueError(f"bad density-matrix header: {header!r}")
        kind, _, dim_text = header
        k = int(dim_text)
        if k < 1:
            raise ValueError("dimension must be positive")
        if kind == DENSITY_MAGIC:
            m = np.empty((k, k), dtype=np.complex128)
            for i in range(k):
                entries = f.readline().split()
                if len(entries) != k:
                    raise ValueError(f"row {i} has {len(entries)} entries, expected {k}")
                for j, text in enumerate(entries):
                    re_text, _, im_text = text.partition(",")
                    if not im_text:
                        raise ValueError(f"entry ({i},{j}) is not 're,im': {text!r}")
                    m[i, j] = complex(float(re_text), float(im_text))
            return density_matrix_from_hermitian(m)
        if kind == SPECTRUM_MAGIC:
            values: list[float] = []
            for line in f:
                values.extend(float(tok) for tok in line.split())
            if len(values) != k:
                raise ValueError(f"expected {k} weights, got {len(values)}")
            return make_density_matrix(np.asarray(values))
        raise ValueError(f"unknown density-matrix kind {kind!r}")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, compact separators, ASCII only."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def record_to_jsonl(record: dict) -> str:
    """One result record as a single JSON line (newline-terminated)."""
    return canonical_json(record) + "\n"


def payload_to_csv(experiment: str, payload: dict) -> str:
    """CSV rendering for tabular payloads (curves and event rates)."""
    if experiment == "converge":
        lines = [CURVE_CSV_HEADER]
        for pt in payload["curve"]["points"]:
            lines.append(
                f"{pt['n']},{pt['trials']},{pt['successes']},"
                f"{_csv_num(pt['p_hat'])},{_csv_num(pt['ci_low'])},{_csv_num(pt['ci_high'])}"
            )
        return "\n".join(lines) + "\n"
    if experiment == "events":
        lines = ["event,rate,bound"]
        for item in payload["pair_rates"]:
            lines.append(
                f"pair[{item['j']},{item['ell']}],{_csv_num(item['rate'])},"
                f"{_csv_num(payload['bounds']['pair_lower'])}"
            )
        for item in payload["norm_rates"]:
            lines.append(
                f"norm[{item['j']}],{_csv_num(item['rate'])},"
                f"{_csv_num(payload['bounds']['norm_lower'])}"
            )
        for item in payload["entry_rates"]:
            lines.append(
                f"entry[{item['i']},{item['j']}],{_csv_num(item['rate'])},"
                f"{_csv_num(payload['bounds']['entry_exact'])}"
            )
        lines.append(
            f"joint,{_csv_num(payload['joint_rate'])},{_csv_num(payload['bounds']['joint_lower'])}"
        )
        return "\n".join(lines) + "\n"
    raise FormatUnsupportedError(
        f"experiment {experiment!r} has no tabular CSV form; use jsonl or text"
    )


def _text_reports(reports: list[dict], out: io.StringIO) -> None:
    width = max((len(r["description"]) for r in reports), default=10)
    for r in reports:
        mark = "PASS" if r["passed"] else "FAIL"
        out.write(
            f"  {r['description']:<{width}}  stat={r['statistic']:.6g}  "
            f"thr={r['threshold']:.6g}  [{mark}]\n"
        )


def payload_to_text(record: dict) -> str:
    """Human-readable summary of a result record."""
    out = io.StringIO()
    experiment = record["experiment"]
    out.write(f"experiment: {experiment}\n")
    out.write(f"seed: {record['seed']}\n")
    params = record.get("params", {})
    if params:
        rendered = ", ".join(f"{k}={params[k]}" for k in sorted(params))
        out.write(f"params: {rendered}\n")
    payload = record["payload"]
    if "curve" in payload:
        out.write(CURVE_CSV_HEADER.replace(",", "  ") + "\n")
        for pt in payload["curve"]["points"]:
            out.write(
                f"{pt['n']:>8}  {pt['trials']:>6}  {pt['successes']:>9}  "
                f"{pt['p_hat']:.4f}  {pt['ci_low']:.4f}  {pt['ci_high']:.4f}\n"
            )
    if "reports" in payload:
        _text_reports(payload["reports"], out)
    if "joint_rate" in payload:
        out.write(f"joint event rate: {payload['joint_rate']:.6g} ")
        out.write(f"(lower bound {payload['bounds']['joint_lower']:.6g})\n")
    if "n0" in payload:
        out.write(f"n0: {payload['n0']}\n")
        for name, value in payload.get("n0_conditions", {}).items():
            out.write(f"  condition {name}: n >= {value}\n")
    if "trials_detail" in payload:
        total = len(payload["trials_detail"])
        in_event = sum(1 for t in payload["trials_detail"] if t["in_good_event"])
        bad = sum(
            t["entry_dist_failures"]
            for t in payload["trials_detail"]
            if t["in_good_event"]
        )
        out.write(
            f"certificate trials: {total}, in good event: {in_event}, "
            f"entry-distance violations in event: {bad}\n"
        )
    if "selection_bias" in payload:
        demo = payload["selection_bias"]
        out.write(
            "adversarial selection demo: deterministic E|.|^2 = "
            f"{demo['deterministic_moment']:.4f} +- {demo['deterministic_se']:.4f}, "
            f"adversarial = {demo['adversarial_moment']:.4f} "
            f"+- {demo['adversarial_se']:.4f}\n"
        )
    return out.getvalue()
