"""Reproducible experiment front end.

Parses `key = value` config files (with `#` comments and comma-separated
lists) plus overriding command-line flags, dispatches one of the named
experiments, and emits a result record.  Payloads are pure functions of
(experiment, params, seed): timestamps and runtimes live outside the payload,
statistical pass/fail lives inside it, and exit status is 0 for a completed
run unless --strict promotes failures.  Progress goes to stderr; stdout is
reserved for results.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import dist_tests, gap, limits
from .formats import (
    FormatUnsupportedError,
    load_density_matrix,
    payload_to_csv,
    payload_to_text,
    record_to_jsonl,
)
from .haar import sample_sphere_marginal
from .streams import MASK64, RandomStream

DEFAULT_SEED = 0
SEED_ENV_VAR = "HAARLAB_SEED"

EXPERIMENTS = (
    "converge",
    "events",
    "certificate",
    "gaussianity",
    "independence",
    "invariance",
    "gap-check",
    "condwf-check",
    "sphere",
)

FORMATS = ("jsonl", "csv", "text")


class ConfigError(ValueError):
    """Carries every validation problem found, not just the first."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    params: dict
    fmt: str = "jsonl"
    out: str | None = None
    workers: int = 1
    strict: bool = False
    warnings: list[str] = field(default_factory=list)


@dataclass
class ResultRecord:
    schema_version: str
    experiment: str
    params: dict
    seed: int
    payload: dict
    timestamp: str
    runtime_seconds: float
    warnings: list[str]

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_u64(text: str) -> int:
    v = int(text.strip())
    if not 0 <= v <= MASK64:
        raise ValueError("must be an unsigned 64-bit integer")
    return v


def _parse_float(text: str) -> float:
    return float(text.strip())


def _parse_int_list(text: str) -> list[int]:
    items = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not items:
        raise ValueError("empty list")
    return [int(tok) for tok in items]


def _parse_float_list(text: str) -> list[float]:
    items = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not items:
        raise ValueError("empty list")
    return [float(tok) for tok in items]


def _parse_complex_list(text: str) -> list[complex]:
    items = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not items:
        raise ValueError("empty list")
    return [complex(tok) for tok in items]


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_str(text: str) -> str:
    return text.strip()


KEY_PARSERS = {
    "experiment": _parse_str,
    "seed": _parse_u64,
    "trials": _parse_int,
    "k": _parse_int,
    "n": _parse_int,
    "eps": _parse_float,
    "delta": _parse_float,
    "alpha": _parse_float,
    "radius": _parse_float,
    "ns": _parse_int_list,
    "c": _parse_complex_list,
    "rho": _parse_str,
    "rho_spectrum": _parse_float_list,
    "workers": _parse_int,
    "format": _parse_str,
    "out": _parse_str,
    "strict": _parse_bool,
    "adversarial_trials": _parse_int,
    "cov_samples": _parse_int,
    "ga_samples": _parse_int,
    "ks_samples": _parse_int,
}

COMMON_KEYS = ("seed", "workers", "format", "out", "strict")

EXPERIMENT_KEYS = {
    "converge": (("k", "eps", "ns", "trials"), ()),
    "events": (("n", "k", "delta", "trials"), ("radius",)),
    "certificate": (("k", "delta", "eps", "trials"), ("n",)),
    "gaussianity": (("n", "k", "trials"), ("alpha",)),
    "independence": (("n", "k", "trials"), ("alpha",)),
    "invariance": (("n", "k", "trials"), ("adversarial_trials",)),
    "gap-check": ((), ("rho", "rho_spectrum", "cov_samples", "ga_samples",
                       "ks_samples", "alpha")),
    "condwf-check": (("c", "n", "trials"), ("alpha",)),
    "sphere": (("n", "trials"), ("k", "alpha")),
}

_MIN_TRIALS = {
    "converge": 100,
    "events": 100,
    "certificate": 1,
    "gaussianity": 1000,
    "independence": 1000,
    "invariance": 100,
    "condwf-check": 1000,
    "sphere": 100,
}


def parse_config_text(text: str) -> dict[str, tuple[str, str]]:
    """`key = value` lines to {key: (raw value, provenance)}; '#' comments."""
    values: dict[str, tuple[str, str]] = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            errors.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        values[key.strip()] = (value.strip(), f"line {lineno}")
    if errors:
        raise ConfigError(errors)
    return values


def build_config(
    file_values: dict[str, tuple[str, str]],
    flag_values: dict[str, str] | None = None,
    experiment: str | None = None,
    env: dict | None = None,
) -> ExperimentConfig:
    """Merge file values and flag overrides into a validated config.

    Precedence: flags > file > environment seed > documented default.
    Raises ConfigError carrying every problem found.
    """
    env = os.environ if env is None else env
    merged: dict[str, tuple[str, str]] = dict(file_values)
    for key, value in (flag_values or {}).items():
        merged[key] = (value, f"flag --{key}")

    errors: list[str] = []
    warnings: list[str] = []
    parsed: dict[str, object] = {}
    for key, (raw, where) in merged.items():
        parser = KEY_PARSERS.get(key)
        if parser is None:
            errors.append(f"{where}: unknown key {key!r}")
            continue
        try:
            parsed[key] = parser(raw)
        except ValueError as exc:
            errors.append(f"{where}: bad value for {key!r}: {exc}")
    provenance = {key: where for key, (_, where) in merged.items()}

    exp = experiment or parsed.get("experiment")
    if exp is None:
        errors.append("missing required key 'experiment'")
        raise ConfigError(errors)
    if exp not in EXPERIMENTS:
        errors.append(f"unknown experiment {exp!r}; choose one of {EXPERIMENTS}")
        raise ConfigError(errors)

    required, optional = EXPERIMENT_KEYS[exp]
    allowed = set(required) | set(optional) | set(COMMON_KEYS) | {"experiment"}
    for key in parsed:
        if key not in allowed:
            errors.append(
                f"{provenance[key]}: key {key!r} is not used by experiment {exp!r}"
            )
    for key in required:
        if key not in parsed:
            errors.append(f"missing required key {key!r} for experiment {exp!r}")

    def where(key: str) -> str:
        return provenance.get(key, "config")

    if "seed" in parsed:
        seed = int(parsed["seed"])  # already validated as u64
    elif env.get(SEED_ENV_VAR):
        try:
            seed = _parse_u64(env[SEED_ENV_VAR])
        except ValueError as exc:
            errors.append(f"environment {SEED_ENV_VAR}: {exc}")
            seed = DEFAULT_SEED
    else:
        seed = DEFAULT_SEED
        warnings.append(f"seed not given; defaulting to {DEFAULT_SEED}")

    fmt = parsed.get("format", "jsonl")
    if fmt not in FORMATS:
        errors.append(f"{where('format')}: format must be one of {FORMATS}")
    workers = int(parsed.get("workers", 1))
    if workers < 1:
        errors.append(f"{where('workers')}: workers must be >= 1")

    # range checks
    if "delta" in parsed and not 0.0 < parsed["delta"] < 1.0:
        errors.append(f"{where('delta')}: delta must lie in (0,1)")
    if "eps" in parsed and parsed["eps"] <= 0.0:
        errors.append(f"{where('eps')}: eps must be positive")
    if "alpha" in parsed and parsed["alpha"] not in dist_tests.KS_CRITICAL:
        errors.append(
            f"{where('alpha')}: alpha must be one of "
            f"{sorted(dist_tests.KS_CRITICAL)}"
        )
    if "radius" in parsed and parsed["radius"] <= 0.0:
        errors.append(f"{where('radius')}: radius must be positive")
    if "k" in parsed and parsed["k"] < 1:
        errors.append(f"{where('k')}: k must be >= 1")
    if "n" in parsed and parsed["n"] < 1:
        errors.append(f"{where('n')}: n must be >= 1")
    if "n" in parsed and "k" in parsed and parsed["n"] < parsed["k"]:
        errors.append(f"{where('n')}: n must be >= k")
    if "ns" in parsed:
        floor = parsed.get("k", 1)
        if any(n < floor for n in parsed["ns"]):
            errors.append(f"{where('ns')}: every n must be >= k")
    if "trials" in parsed and exp in _MIN_TRIALS:
        if parsed["trials"] < _MIN_TRIALS[exp]:
            errors.append(
                f"{where('trials')}: trials must be >= {_MIN_TRIALS[exp]} "
                f"for experiment {exp!r}"
            )
    for key in ("adversarial_trials", "cov_samples", "ga_samples", "ks_samples"):
        if key in parsed and parsed[key] < 100:
            errors.append(f"{where(key)}: {key} must be >= 100")
    if exp == "gap-check":
        has_rho = ("rho" in parsed) + ("rho_spectrum" in parsed)
        if has_rho != 1:
            errors.append("gap-check needs exactly one of 'rho' or 'rho_spectrum'")
        if "rho_spectrum" in parsed:
            spectrum = parsed["rho_spectrum"]
            if any(w < 0 for w in spectrum) or abs(sum(spectrum) - 1.0) > 1e-10:
                errors.append(
                    f"{where('rho_spectrum')}: weights must be nonnegative "
                    "and sum to 1"
                )
    if exp == "condwf-check" and "c" in parsed:
        total = sum(abs(z) ** 2 for z in parsed["c"])
        if abs(total - 1.0) > 1e-10:
            errors.append(f"{where('c')}: squared coefficients must sum to 1")
        if "n" in parsed and parsed["n"] < len(parsed["c"]):
            errors.append(f"{where('n')}: n must be >= the number of coefficients")

    if errors:
        raise ConfigError(errors)

    params = {
        key: parsed[key]
        for key in parsed
        if key not in COMMON_KEYS and key != "experiment"
    }
    return ExperimentConfig(
        experiment=exp,
        seed=seed,
        params=params,
        fmt=fmt,
        out=parsed.get("out"),
        workers=workers,
        strict=bool(parsed.get("strict", False)),
        warnings=warnings,
    )


def parse_config(source: str, experiment: str | None = None) -> ExperimentConfig:
    """Validate a config given as `key = value` text."""
    return build_config(parse_config_text(source), experiment=experiment)


# ---------------------------------------------------------------------------
# Payload builders
# ---------------------------------------------------------------------------


def _report_dicts(reports) -> list[dict]:
    return [
        {
            "description": r.description,
            "statistic": r.statistic,
            "threshold": r.threshold,
            "passed": r.passed,
            "n_samples": r.n_samples,
        }
        for r in reports
    ]


def _reports_payload(reports, extra: dict | None = None) -> dict:
    payload = {
        "reports": _report_dicts(reports),
        "all_passed": all(r.passed for r in reports),
    }
    if extra:
        payload.update(extra)
    return payload


def _run_converge(config: ExperimentConfig, stream: RandomStream) -> dict:
    p = config.params
    curve = limits.estimate_coupling_probability(
        stream, p["k"], p["eps"], p["ns"], p["trials"], workers=config.workers
    )
    return {
        "curve": {
            "k": curve.k,
            "eps": curve.eps,
            "points": [asdict(pt) for pt in curve.points],
        }
    }


def _run_events(config: ExperimentConfig, stream: RandomStream) -> dict:
    p = config.params
    params = limits.EventParams(
        k=p["k"], delta=p["delta"], n=p["n"], radius=p.get("radius")
    )
    rates = limits.estimate_event_rates(
        stream, params, p["trials"], workers=config.workers
    )
    k = rates.k
    return {
        "n": rates.n,
        "k": k,
        "delta": rates.delta,
        "radius": rates.radius,
        "trials": rates.trials,
        "pair_rates": [
            {"j": j + 1, "ell": ell + 1, "rate": float(rates.pair_rate[j, ell])}
            for j in range(k)
            for ell in range(k)
            if j != ell
        ],
        "norm_rates": [
            {"j": j + 1, "rate": float(rates.norm_rate[j])} for j in range(k)
        ],
        "entry_rates": [
            {"i": i + 1, "j": j + 1, "rate": float(rates.entry_rate[i, j])}
            for i in range(k)
            for j in range(k)
        ],
        "joint_rate": rates.joint_rate,
        "bounds": rates.bounds,
    }


def _run_certificate(config: ExperimentConfig, stream: RandomStream) -> dict:
    p = config.params
    ledger = limits.build_constant_ledger(p["k"], p["delta"], p["eps"])
    n = p.get("n", ledger.n0)
    trials = limits.run_certificate_trials(
        stream, ledger, n, p["trials"], workers=config.workers
    )
    in_event = [t for t in trials if t.in_good_event]
    return {
        "k": ledger.k,
        "delta": ledger.delta,
        "eps": ledger.eps,
        "radius": ledger.radius,
        "constants": {
            "col_dist": {str(j): v for j, v in ledger.col_dist.items()},
            "cross_inner": {str(j): v for j, v in ledger.cross_inner.items()},
            "proj_entry": {str(j): v for j, v in ledger.proj_entry.items()},
            "proj_norm_sq": {str(j): v for j, v in ledger.proj_norm_sq.items()},
            "norm_ratio": {str(j): v for j, v in ledger.norm_ratio.items()},
        },
        "n0": ledger.n0,
        "n0_conditions": dict(ledger.n0_conditions),
        "n": n,
        "trials": len(trials),
        "in_good_event_count": len(in_event),
        "entry_dist_violations_in_event": sum(
            t.entry_dist_failures for t in in_event
        ),
        "all_passed_in_event": all(t.all_passed for t in in_event),
        "trials_detail": [asdict(t) for t in trials],
    }


def _run_gaussianity(config: ExperimentConfig, stream: RandomStream) -> dict:
    p = config.params
    reports = dist_tests.entrywise_gaussianity(
        stream, p["n"], p["k"], p["trials"], alpha=p.get("alpha", 0.01)
    )
    return _reports_payload(
        reports, {"n": p["n"], "k": p["k"], "trials": p["trials"]}
    )


def _run_independence(config: ExperimentConfig, stream: RandomStream) -> dict:
    p = config.params
    reports = dist_tests.independence_check(stream, p["n"], p["k"], p["trials"])
    return _reports_payload(
        reports, {"n": p["n"], "k": p["k"], "trials": p["trials"]}
    )


def _run_invariance(config: ExperimentConfig, stream: RandomStream) -> dict:
    p = config.params
    n, k = p["n"], p["k"]
    selections = [
        (list(range(k)), list(range(k))),
        (list(range(n - k, n)), list(range(n - k, n))),
    ]
    reports = dist_tests.submatrix_invariance(
        stream.child(1), n, k, selections, p["trials"]
    )
    demo = dist_tests.adversarial_selection_demo(
        stream.child(2), n, k, p.get("adversarial_trials", 1000)
    )
    return _reports_payload(
        reports,
        {
            "n": n,
            "k": k,
            "trials": p["trials"],
            "selections": [{"rows": r, "cols": c} for r, c in selections],
            "selection_bias": asdict(demo),
        },
    )


def _load_rho(p: dict) -> gap.DensityMatrix:
    if "rho" in p:
        return load_density_matrix(p["rho"])
    return gap.make_density_matrix(np.asarray(p["rho_spectrum"]))


def _run_gap_check(config: ExperimentConfig, stream: RandomStream) -> dict:
    p = config.params
    rho = _load_rho(p)
    counts = {
        "cov_samples": p.get("cov_samples", 100_000),
        "ga_samples": p.get("ga_samples", 100_000),
        "ks_samples": p.get("ks_samples", 10_000),
    }
    reports = gap.gap_chain_check(
        rho, stream, alpha=p.get("alpha", 0.01), **counts
    )
    return _reports_payload(
        reports, {"spectrum": [float(w) for w in rho.weights], **counts}
    )


def _run_condwf_check(config: ExperimentConfig, stream: RandomStream) -> dict:
    p = config.params
    coeffs = np.asarray(p["c"], dtype=complex)
    n, trials = p["n"], p["trials"]
    rho = gap.make_density_matrix(np.abs(coeffs) ** 2)
    sample_stream = stream.child(1)
    batch = np.empty((trials, coeffs.size), dtype=np.complex128)
    for t in range(trials):
        batch[t] = gap.sample_conditional_wavefunction(coeffs, n, sample_stream)
    reports = gap.compare_to_gap(
        batch, rho, stream.child(2), alpha=p.get("alpha", 0.01)
    )
    return _reports_payload(
        reports,
        {
            "c_squared": [float(abs(z) ** 2) for z in coeffs],
            "n": n,
            "trials": trials,
        },
    )


def _run_sphere(config: ExperimentConfig, stream: RandomStream) -> dict:
    p = config.params
    n, trials = p["n"], p["trials"]
    k = p.get("k", 1)
    draws = np.empty((trials, k), dtype=np.complex128)
    for t in range(trials):
        draws[t] = sample_sphere_marginal(stream, n, k)
    alpha = p.get("alpha", 0.01)
    reports = []
    for coord in range(k):
        z = draws[:, coord]
        reports.append(
            dist_tests.ks_statistic(
                z.real, "normal_half", alpha,
                f"coordinate {coord + 1} re vs N(0,1/2), n={n}",
            )
        )
        reports.append(
            dist_tests.ks_statistic(
                z.imag, "normal_half", alpha,
                f"coordinate {coord + 1} im vs N(0,1/2), n={n}",
            )
        )
    return _reports_payload(reports, {"n": n, "k": k, "trials": trials})


_RUNNERS = {
    "converge": _run_converge,
    "events": _run_events,
    "certificate": _run_certificate,
    "gaussianity": _run_gaussianity,
    "independence": _run_independence,
    "invariance": _run_invariance,
    "gap-check": _run_gap_check,
    "condwf-check": _run_condwf_check,
    "sphere": _run_sphere,
}


def run_experiment(config: ExperimentConfig) -> ResultRecord:
    """Dispatch one experiment; the payload is deterministic given the config."""
    stream = RandomStream(config.seed)
    started = time.perf_counter()
    payload = _RUNNERS[config.experiment](config, stream)
    runtime = time.perf_counter() - started
    params = {
        key: ([str(z) for z in value] if key == "c" else value)
        for key, value in config.params.items()
    }
    return ResultRecord(
        schema_version="1",
        experiment=config.experiment,
        params=params,
        seed=config.seed,
        payload=payload,
        timestamp=datetime.now(timezone.utc).isoformat(),
        runtime_seconds=runtime,
        warnings=list(config.warnings),
    )


def write_results(record: ResultRecord, fmt: str = "jsonl", out=None) -> None:
    """Render a record as jsonl, csv, or a text summary; `out` defaults to stdout."""
    if fmt == "jsonl":
        rendered = record_to_jsonl(record.to_dict())
    elif fmt == "csv":
        rendered = payload_to_csv(record.experiment, record.payload)
    elif fmt == "text":
        rendered = payload_to_text(record.to_dict())
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if out is None or out == "-":
        sys.stdout.write(rendered)
    else:
        with open(out, "w", encoding="utf-8") as f:
            f.write(rendered)


def _has_failures(payload: dict) -> bool:
    if payload.get("all_passed") is False:
        return True
    if payload.get("all_passed_in_event") is False:
        return True
    if payload.get("entry_dist_violations_in_event", 0) > 0:
        return True
    return False


def _build_argparser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haarlab",
        description="Run a reproducible corner-statistics experiment.",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--eps", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--n", type=int)
    parser.add_argument("--ns", help="comma-separated dimension list")
    parser.add_argument("--rho", help="density-matrix file")
    parser.add_argument("--format", choices=FORMATS, dest="fmt")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--strict", action="store_true",
                        help="exit 1 when a statistical check fails")
    return parser


def main(argv=None) -> int:
    args = _build_argparser().parse_args(argv)
    file_values: dict[str, tuple[str, str]] = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as f:
                file_values = parse_config_text(f.read())
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
        except ConfigError as exc:
            for problem in exc.errors:
                print(f"error: {problem}", file=sys.stderr)
            return 2
    flag_values = {}
    for key in ("seed", "trials", "k", "eps", "delta", "n", "ns", "rho",
                "out", "workers"):
        value = getattr(args, key)
        if value is not None:
            flag_values[key] = str(value)
    if args.fmt is not None:
        flag_values["format"] = args.fmt
    if args.strict:
        flag_values["strict"] = "true"

    try:
        config = build_config(file_values, flag_values, experiment=args.experiment)
    except ConfigError as exc:
        for problem in exc.errors:
            print(f"error: {problem}", file=sys.stderr)
        return 2

    for warning in config.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(
        f"running {config.experiment} (seed {config.seed}, "
        f"workers {config.workers})",
        file=sys.stderr,
    )
    record = run_experiment(config)
    print(f"done in {record.runtime_seconds:.2f}s", file=sys.stderr)
    try:
        write_results(record, config.fmt, config.out)
    except FormatUnsupportedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if config.strict and _has_failures(record.payload):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
