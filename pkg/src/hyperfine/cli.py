"""Batch verification runs driven by JSON configs.

Usage::

    hyperfine <command> --config run.json [--out DIR] [--rng-seed SEED]

Each run writes ``<command>.json`` (and ``<command>.csv`` for tabular
commands) into the output directory and exits 0 iff every check passed.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .clifford import ImaginaryUnit
from .errors import ConfigInvalid, HyperfineError
from .jets import AM, OperatorWord, classify_membership
from .kernels import _CLOSED_FORMS, closed_form_gate, fine_kernel, random_admissible_points
from .operators import (
    Contour,
    OperatorTuple,
    calculus_oracle,
    circle_contour,
    default_contour,
    functional_calculus,
    s_spectrum,
)
from .slices import chain, default_domain, seed_from_id, structures_for, tfs1, tfs2

COMMANDS = ("verify-fueter-sce", "verify-chains", "verify-kernels", "s-spectrum", "calculus-compare", "quadrature-study")

DEFAULT_TOLERANCES = {
    "verify-fueter-sce": {"residual": 1e-9},
    "verify-chains": {"residual": 1e-9},
    "verify-kernels": {"residual": 1e-10},
    "s-spectrum": {"residual": 1e-6},
    "calculus-compare": {"residual": 1e-8, "independence": 1e-8},
    "quadrature-study": {"ratio": 0.1, "floor": 1e-12},
}
DEFAULT_NODES = (32, 64, 128, 256, 512)
CHECK_KEYS = ("name", "subject", "max_residual", "tolerance", "pass", "error")
REPORT_KEYS = ("command", "config", "checks", "passed", "environment", "timing")
CSV_HEADERS = {"s-spectrum": ("center", "radius", "multiplicity"), "quadrature-study": ("N", "error")}


@dataclass
class RunConfig:
    command: str
    n: int = 3
    seeds: list = field(default_factory=list)
    words: list = field(default_factory=list)
    structure: str | None = None
    points: int = 100
    T: list | None = None
    f: str = "z^2"
    kind: str = "S"
    planes: list = field(default_factory=list)
    radii: list = field(default_factory=list)
    center: float = 0.0
    nodes: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)
    rng_seed: int = 0

    def echo(self) -> dict:
        return {
            "command": self.command,
            "n": self.n,
            "seeds": list(self.seeds),
            "words": list(self.words),
            "structure": self.structure,
            "points": self.points,
            "T": self.T,
            "f": self.f,
            "kind": self.kind,
            "planes": [list(p) for p in self.planes],
            "radii": list(self.radii),
            "center": self.center,
            "nodes": list(self.nodes),
            "tolerances": dict(self.tolerances),
            "rng_seed": self.rng_seed,
        }

    def operator(self) -> OperatorTuple:
        return OperatorTuple(self.T)

    def tolerance(self, key: str) -> float:
        return self.tolerances[key]


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _parse_matrices(raw, n: int, errors: dict):
    """List of ``n + 1`` matrices, or a mapping from component index to matrix."""
    if isinstance(raw, dict):
        items = {}
        for k, v in raw.items():
            try:
                j = int(k)
            except (TypeError, ValueError):
                errors["T"] = f"component key {k!r} is not an integer"
                return None
            if not 0 <= j <= n:
                errors["T"] = f"component index {j} outside 0..{n}"
                return None
            items[j] = v
        mats = [items.get(j) for j in range(n + 1)]
    elif isinstance(raw, list):
        if len(raw) != n + 1:
            errors["T"] = f"expected {n + 1} matrices (T_0..T_{n}), got {len(raw)}"
            return None
        mats = list(raw)
    else:
        errors["T"] = "must be a list of matrices or a mapping index -> matrix"
        return None
    shape = None
    for j, M in enumerate(mats):
        if M is None:
            continue
        if not (isinstance(M, list) and M and all(isinstance(r, list) for r in M)):
            errors["T"] = f"T_{j} is not a list of rows"
            return None
        if any(len(r) != len(M) for r in M) or not all(_is_number(x) for r in M for x in r):
            errors["T"] = f"T_{j} is not a square matrix of finite numbers"
            return None
        if shape is not None and len(M) != shape:
            errors["T"] = "matrices have different sizes"
            return None
        shape = len(M)
    if shape is None:
        errors["T"] = "no matrices given"
        return None
    zero = [[0.0] * shape for _ in range(shape)]
    return [[[float(x) for x in r] for r in M] if M is not None else zero for M in mats]


def parse_config(raw: dict, command: str | None = None, rng_seed: int | None = None) -> RunConfig:
    """Validate a raw JSON config; raises ``ConfigInvalid`` listing every bad field."""
    errors: dict = {}
    if not isinstance(raw, dict):
        raise ConfigInvalid({"config": "top level must be a JSON object"})
    known = set(RunConfig.__dataclass_fields__) | {"contour"}
    for key in raw:
        if key not in known:
            errors[key] = "unknown field"

    cmd = raw.get("command", command)
    if command is not None and raw.get("command") not in (None, command):
        errors["command"] = f"config says {raw.get('command')!r} but {command!r} was requested"
    elif cmd not in COMMANDS:
        errors["command"] = f"must be one of {', '.join(COMMANDS)}"

    n = raw.get("n", 3)
    if n not in (3, 5) or isinstance(n, bool):
        errors["n"] = "must be 3 or 5"
        n = 3

    seeds = raw.get("seeds", ["z^2"])
    if not isinstance(seeds, list) or not seeds:
        errors["seeds"] = "must be a non-empty list of seed ids"
        seeds = []
    else:
        for s in seeds:
            try:
                seed_from_id(s)
            except (ValueError, TypeError) as exc:
                errors["seeds"] = f"bad seed id {s!r}: {exc}"

    words = raw.get("words", [])
    if not isinstance(words, list):
        errors["words"] = "must be a list of operator words"
        words = []
    for w in words:
        try:
            OperatorWord.parse(w)
        except (ValueError, TypeError, AttributeError) as exc:
            errors["words"] = f"bad word {w!r}: {exc}"

    structure = raw.get("structure")
    if structure is not None and structure not in {s.name for s in structures_for(n)}:
        errors["structure"] = f"no fine structure {structure!r} for n = {n}"

    points = raw.get("points", 100)
    if not isinstance(points, int) or isinstance(points, bool) or points < 1:
        errors["points"] = "must be a positive integer"

    T = None
    if "T" in raw:
        T = _parse_matrices(raw["T"], n, errors)
    elif cmd in ("s-spectrum", "calculus-compare", "quadrature-study"):
        errors["T"] = "required for this command"

    f = raw.get("f", "exp" if cmd == "quadrature-study" else "z^2")
    try:
        seed_from_id(f)
    except (ValueError, TypeError) as exc:
        errors["f"] = f"bad seed id {f!r}: {exc}"

    kind = raw.get("kind", "S")
    if not (kind in ("S", "F") or (isinstance(kind, str) and kind.startswith("fine:"))):
        errors["kind"] = "must be 'S', 'F' or 'fine:<word>'"

    contour = raw.get("contour", {})
    planes, radii, center = [], [], 0.0
    if not isinstance(contour, dict):
        errors["contour"] = "must be an object"
        contour = {}
    for key in contour:
        if key not in ("planes", "radii", "center", "nodes"):
            errors[f"contour.{key}"] = "unknown field"
    for d in contour.get("planes", []):
        if not (isinstance(d, list) and len(d) == n and all(_is_number(x) for x in d) and any(d)):
            errors["contour.planes"] = f"each plane is a non-zero list of {n} numbers"
            break
        planes.append([float(x) for x in d])
    for r in contour.get("radii", []):
        if not (_is_number(r) and r > 0):
            errors["contour.radii"] = "radii must be positive numbers"
            break
        radii.append(float(r))
    center = contour.get("center", 0.0)
    if not _is_number(center):
        errors["contour.center"] = "must be a number"
        center = 0.0

    nodes = contour.get("nodes", list(DEFAULT_NODES) if cmd == "quadrature-study" else [512])
    if isinstance(nodes, int) and not isinstance(nodes, bool):
        nodes = [nodes]
    if not isinstance(nodes, list) or not nodes:
        errors["contour.nodes"] = "must be a power of two or a list of them"
        nodes = []
    for N in nodes:
        if not (isinstance(N, int) and not isinstance(N, bool) and 32 <= N <= 4096 and N & (N - 1) == 0):
            errors["contour.nodes"] = f"N = {N!r} is not a power of two in [32, 4096]"
            break

    tolerances = dict(DEFAULT_TOLERANCES.get(cmd, {}))
    given = raw.get("tolerances", {})
    if not isinstance(given, dict):
        errors["tolerances"] = "must be an object"
        given = {}
    for key, value in given.items():
        if key not in tolerances:
            errors[f"tolerances.{key}"] = "not used by this command"
        elif not (_is_number(value) and value > 0):
            errors[f"tolerances.{key}"] = "must be a positive number"
        else:
            tolerances[key] = float(value)

    seed_value = raw.get("rng_seed", 0) if rng_seed is None else rng_seed
    if not (isinstance(seed_value, int) and not isinstance(seed_value, bool) and 0 <= seed_value < 2**64):
        errors["rng_seed"] = "must be an integer in [0, 2**64)"

    if errors:
        raise ConfigInvalid(errors)
    return RunConfig(
        command=cmd,
        n=n,
        seeds=list(seeds),
        words=list(words),
        structure=structure,
        points=points,
        T=T,
        f=f,
        kind=kind,
        planes=planes,
        radii=radii,
        center=float(center),
        nodes=list(nodes),
        tolerances=tolerances,
        rng_seed=seed_value,
    )


# checks


def _check(name: str, subject: str, residual, tolerance: float, passed: bool | None = None, error: str | None = None):
    if residual is not None:
        residual = float(residual)
    if passed is None:
        passed = residual is not None and residual < tolerance
    return {
        "name": name,
        "subject": subject,
        "max_residual": residual,
        "tolerance": tolerance,
        "pass": bool(passed and error is None),
        "error": error,
    }


def _guarded(name: str, subject: str, tolerance: float, fn):
    """Run ``fn`` and turn module errors into a failed check."""
    try:
        return fn()
    except (HyperfineError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return [_check(name, subject, None, tolerance, False, f"{type(exc).__name__}: {exc}")]


def _rng(config: RunConfig, salt: int = 0) -> np.random.Generator:
    return np.random.default_rng([config.rng_seed, salt])


def run_fueter_sce(config: RunConfig):
    tol = config.tolerance("residual")
    checks = []
    for i, sid in enumerate(config.seeds):

        def body(sid=sid, i=i):
            seed = seed_from_id(sid)
            f = tfs1(seed, config.n)
            points = default_domain(seed).sample(config.n, config.points, _rng(config, i))
            rep = classify_membership(tfs2(f), AM, points, tolerance=tol)
            return [_check("D∘T_FS2 residual", sid, rep.max_residual, tol)]

        checks += _guarded("D∘T_FS2 residual", sid, tol, body)
    return checks, []


def _default_chain_words(n: int) -> list[str]:
    out = []
    for s in structures_for(n):
        acc = OperatorWord()
        for step in s.steps:
            acc = acc + step
            text = ",".join(acc.letters)
            if text not in out:
                out.append(text)
    return out


def run_chains(config: RunConfig):
    tol = config.tolerance("residual")
    words = config.words or _default_chain_words(config.n)
    checks = []
    for i, sid in enumerate(config.seeds):
        seed = seed_from_id(sid)
        for w in words:
            word = OperatorWord.parse(w)
            subject = f"{sid} | {','.join(word.letters)}"

            def body(seed=seed, word=word, subject=subject, i=i):
                f = tfs1(seed, config.n)
                sampler, tag = chain(f, word, config.structure)
                points = default_domain(seed).sample(config.n, config.points, _rng(config, i))
                rep = classify_membership(sampler, tag, points, tolerance=tol)
                return [_check(f"membership {tag.name}", subject, rep.max_residual, tol)]

            checks += _guarded("membership", subject, tol, body)
    return checks, []


def run_kernels(config: RunConfig):
    tol = config.tolerance("residual")
    if config.words:
        words = [OperatorWord.parse(w) for w in config.words]
    else:
        words = [_word_from_canonical(c) for (n, c) in _CLOSED_FORMS if n == config.n]
    checks = []
    for w in words:
        subject = ",".join(w.letters) or "S_L"

        def body(w=w, subject=subject):
            closed_form_gate(w, config.n)
            worst = 0.0
            for p in random_admissible_points(_rng(config), config.n, config.points):
                a = fine_kernel(w, p, via="jet")
                b = fine_kernel(w, p, via="closed_form")
                worst = max(worst, (a - b).norm() / max(b.norm(), 1e-300))
            return [_check("closed form vs jet", subject, worst, tol)]

        checks += _guarded("closed form vs jet", subject, tol, body)
    return checks, []


def _word_from_canonical(c) -> OperatorWord:
    nD, nDbar, nDelta = c
    return OperatorWord(["Delta"] * nDelta + ["Dbar"] * nDbar + ["D"] * nD)


def run_spectrum(config: RunConfig):
    tol = config.tolerance("residual")
    rows = []

    def body():
        rep = s_spectrum(config.operator(), rng_seed=config.rng_seed)
        rows.extend((c, r, k) for c, r, k in rep.spheres)
        return [_check("singular-value probe", "S-spectrum", rep.residual, tol)]

    return _guarded("singular-value probe", "S-spectrum", tol, body), rows


def _contours(config: RunConfig, spectrum, nodes: int) -> list[Contour]:
    planes = [ImaginaryUnit(p, normalize=True) for p in config.planes] or [ImaginaryUnit.basis(config.n, 1)]
    out = []
    for plane in planes:
        if config.radii:
            out += [circle_contour(r, config.center, plane, nodes) for r in config.radii]
        else:
            out.append(default_contour(spectrum, config.n, plane, nodes))
    return out


def _relative(a, b) -> float:
    return (a - b).norm() / max(b.norm(), 1.0)


def run_calculus(config: RunConfig):
    tol = config.tolerance("residual")
    subject = f"{config.kind} | {config.f}"

    def body():
        T = config.operator()
        spectrum = s_spectrum(T, rng_seed=config.rng_seed)
        oracle = calculus_oracle(config.kind, config.f, T)
        checks = []
        for N in config.nodes:
            results = [functional_calculus(config.kind, config.f, T, C, spectrum) for C in _contours(config, spectrum, N)]
            err = max(_relative(r, oracle) for r in results)
            checks.append(_check("|contour - direct|", f"{subject} | N={N}", err, tol))
            if len(results) > 1:
                itol = config.tolerance("independence")
                diff = max(_relative(a, b) for i, a in enumerate(results) for b in results[i + 1 :])
                checks.append(_check("contour independence", f"{subject} | N={N}", diff, itol))
        return checks

    return _guarded("|contour - direct|", subject, tol, body), []


def run_quadrature(config: RunConfig):
    ratio_tol, floor = config.tolerance("ratio"), config.tolerance("floor")
    subject = f"{config.kind} | {config.f}"
    rows = []

    def body():
        T = config.operator()
        spectrum = s_spectrum(T, rng_seed=config.rng_seed)
        oracle = calculus_oracle(config.kind, config.f, T)
        errors = []
        for N in sorted(config.nodes):
            C = _contours(config, spectrum, N)[0]
            err = _relative(functional_calculus(config.kind, config.f, T, C, spectrum), oracle)
            errors.append((N, err))
            rows.append((N, err))
        worst = 0.0
        for (N1, e1), (N2, e2) in zip(errors, errors[1:]):
            if e1 < floor:
                break
            if N2 == 2 * N1:
                worst = max(worst, e2 / e1)
        return [
            _check("error ratio per doubling", subject, worst, ratio_tol, worst <= ratio_tol),
            _check("final error", f"{subject} | N={errors[-1][0]}", errors[-1][1], floor),
        ]

    return _guarded("error ratio per doubling", subject, ratio_tol, body), rows


RUNNERS = {
    "verify-fueter-sce": run_fueter_sce,
    "verify-chains": run_chains,
    "verify-kernels": run_kernels,
    "s-spectrum": run_spectrum,
    "calculus-compare": run_calculus,
    "quadrature-study": run_quadrature,
}


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def run(config: RunConfig) -> tuple[dict, list]:
    """Execute a validated config; returns ``(report, csv_rows)``."""
    start = time.perf_counter()
    checks, rows = RUNNERS[config.command](config)
    elapsed = time.perf_counter() - start
    report = {
        "command": config.command,
        "config": config.echo(),
        "checks": checks,
        "passed": all(c["pass"] for c in checks),
        "environment": {
            "precision": "float64",
            "version": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "timing": {"seconds": elapsed},
    }
    return _json_safe(report), rows


def format_float(x) -> str:
    """Shortest round-trip decimal, without a trailing ``.0`` on integers."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x == 0.0:
        return "0"
    text = repr(x)
    return text[:-2] if text.endswith(".0") else text


def write_outputs(report: dict, rows: list, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / f"{report['command']}.json"
    path.write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    written.append(path)
    header = CSV_HEADERS.get(report["command"])
    if header is not None:
        path = out_dir / f"{report['command']}.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([format_float(v) for v in row])
        written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hyperfine", description="Fueter-Sce fine structure verification runs")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory (default: current)")
    parser.add_argument("--rng-seed", type=int, default=None, help="overrides rng_seed in the config")
    args = parser.parse_args(argv)

    try:
        raw = json.loads(args.config.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        config = parse_config(raw, args.command, args.rng_seed)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    report, rows = run(config)
    for c in report["checks"]:
        status = "PASS" if c["pass"] else "FAIL"
        detail = c["error"] or f"{c['max_residual']:.3e} (tol {c['tolerance']:.1e})"
        print(f"{status}  {c['name']}  [{c['subject']}]  {detail}")
    for path in write_outputs(report, rows, args.out):
        print(f"wrote {path}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
