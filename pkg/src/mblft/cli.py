"""Command-line front end.

Subcommands::

    mblft equilibrium MODEL.yaml
        Solve the parameter-dependent equilibrium and print nominal body
        orientations, joint torques/loads and the root reaction.

    mblft linearize MODEL.yaml -o MODEL.json [--no-reduce] [--strict-bounds]
        Assemble the linearized LFT state-space model and write it as a
        JSON export; prints the model order and the per-parameter
        occurrence table.

    mblft sample EXPORT.json (--point-file PTS.json | --grid SPEC) -o DIR
        Evaluate the exported model at each parameter point.  Writes one
        matrices file per point plus a combined poles CSV
        (header: re,im,freq_hz,damping).

    mblft validate MODEL.yaml [--points N] [--seed S]
        Cross-check the LFT linearization against a finite-difference
        linearization of the independent nonlinear model, at the nominal
        point and N random parameter points.

Exit codes: 0 success, 2 model-file/schema error, 3 numerical error
(trim failure, singularity, ill-posedness), 4 validation failure.
Output precision is controlled by the MBLFT_PRECISION environment
variable (significant digits, default 15).  Given the same files, flags
and seed, all outputs are byte-identical between runs.
"""
from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
import tempfile

import numpy as np

from . import lft
from .assembly import (
    AssemblyError,
    TrimError,
    assemble,
    modes,
    sample_point,
)
from .bodies import BodyError
from .joints import JointError
from .modelfile import ModelFileError, load_model
from .oracle import FdConfig, NonlinearEvaluator, fd_linearize
from .spatial import FrameError, GimbalLockError

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

VALIDATION_TOL = 1e-4

_NUMERICAL_ERRORS = (
    TrimError,
    AssemblyError,
    BodyError,
    JointError,
    GimbalLockError,
    FrameError,
    lft.WellPosednessError,
    lft.EvaluationError,
    lft.LftError,
    np.linalg.LinAlgError,
)


def _precision() -> int:
    raw = os.environ.get("MBLFT_PRECISION", "15")
    try:
        prec = int(raw)
    except ValueError:
        raise SystemExit(f"MBLFT_PRECISION must be an integer, got {raw!r}")
    if not 1 <= prec <= 17:
        raise SystemExit("MBLFT_PRECISION must be between 1 and 17")
    return prec


def _fmt(x: float, prec: int) -> str:
    return f"{float(x):.{prec}g}"


def _fmt_vec(v, prec: int) -> str:
    return "[" + ", ".join(_fmt(x, prec) for x in np.asarray(v).ravel()) + "]"


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, indent=1, default=float) + "\n"


# ---------------------------------------------------------------------------
# equilibrium
# ---------------------------------------------------------------------------


def cmd_equilibrium(args) -> int:
    prec = _precision()
    model = load_model(args.model)
    lm = assemble(model)
    rep = lm.equilibrium.report()
    out = [f"model: {model.name}", "bodies:"]
    for name, info in rep["bodies"].items():
        out.append(
            f"  {name}: euler_deg={_fmt_vec(info['euler_deg'], prec)} "
            f"position={_fmt_vec(info['position'], prec)}"
        )
    out.append("joints:")
    for name, info in rep["joints"].items():
        out.append(
            f"  {name}: torque={_fmt(info['torque'], prec)} "
            f"load={_fmt_vec(info['load'], prec)}"
        )
    out.append(f"root_reaction: {_fmt_vec(rep['root_reaction'], prec)}")
    print("\n".join(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# linearize
# ---------------------------------------------------------------------------


def _occurrence_table(lm, prec: int) -> list:
    rows = [f"order: {lm.order}",
            f"states: {', '.join(lm.state_names)}",
            f"inputs: {', '.join(lm.input_names)}",
            "occurrences (A / B):"]
    summary = lm.delta_summary()
    for name in sorted(summary):
        info = summary[name]
        rows.append(
            f"  {name} ({info['kind']}): {info.get('A', 0)} / {info.get('B', 0)}"
        )
    return rows


def cmd_linearize(args) -> int:
    prec = _precision()
    model = load_model(args.model)
    lm = assemble(model, reduce=not args.no_reduce)
    export = lm.to_export_dict()
    export["strict_bounds"] = bool(args.strict_bounds)
    _atomic_write(args.output, _json_text(export))
    print("\n".join([f"model: {model.name}"] + _occurrence_table(lm, prec)))
    print(f"wrote: {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------


def _parse_grid(spec: str) -> list:
    """'name=lo:hi:N[,name=lo:hi:N...]' -> list of parameter points."""
    axes = []
    for part in spec.split(","):
        if "=" not in part:
            raise ModelFileError(f"--grid: expected 'name=lo:hi:N', got {part!r}")
        name, rng = part.split("=", 1)
        pieces = rng.split(":")
        if len(pieces) != 3:
            raise ModelFileError(f"--grid: expected 'lo:hi:N' after '=', got {rng!r}")
        try:
            lo, hi, n = float(pieces[0]), float(pieces[1]), int(pieces[2])
        except ValueError:
            raise ModelFileError(f"--grid: non-numeric bounds in {part!r}") from None
        if n < 1:
            raise ModelFileError("--grid: point count must be >= 1")
        axes.append((name.strip(), np.linspace(lo, hi, n)))
    return [
        {name: float(v) for (name, _), v in zip(axes, combo)}
        for combo in itertools.product(*(vals for _, vals in axes))
    ]


def _load_points(path: str) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not all(isinstance(p, dict) for p in data):
        raise ModelFileError(
            f"{path}: expected a JSON object or list of objects mapping "
            "parameter names to values"
        )
    return data


def cmd_sample(args) -> int:
    prec = _precision()
    with open(args.export, "r", encoding="utf-8") as fh:
        export = json.load(fh)
    if export.get("format") != "mblft-linear-model":
        raise ModelFileError(f"{args.export}: not a linear-model export")
    mats = {tag: lft.LftMatrix.from_dict(export[tag]) for tag in "ABCD"}
    nominal = {name: p["nominal"] for name, p in export["parameters"].items()}
    known = set(nominal)
    mode = "error" if export.get("strict_bounds") else "ignore"

    points = _parse_grid(args.grid) if args.grid else _load_points(args.point_file)
    for pt in points:
        unknown = set(pt) - known
        if unknown:
            raise ModelFileError(
                f"unknown parameter(s) {sorted(unknown)!r}; "
                f"known: {sorted(known)}"
            )

    os.makedirs(args.output, exist_ok=True)
    csv_rows = ["re,im,freq_hz,damping"]
    for i, pt in enumerate(points):
        full = dict(nominal)
        full.update(pt)
        num = {tag: m.evaluate(full, out_of_bounds=mode) for tag, m in mats.items()}
        md = modes(num["A"])
        payload = {
            "point": {k: full[k] for k in sorted(full)},
            "state_names": export["state_names"],
            "input_names": export["input_names"],
            "output_names": export["output_names"],
            "A": [[float(v) for v in row] for row in num["A"]],
            "B": [[float(v) for v in row] for row in num["B"]],
            "C": [[float(v) for v in row] for row in num["C"]],
            "D": [[float(v) for v in row] for row in num["D"]],
            "poles": [
                {
                    "re": lam.real,
                    "im": lam.imag,
                    "freq_hz": f,
                    "damping": z,
                }
                for lam, f, z in md
            ],
        }
        _atomic_write(
            os.path.join(args.output, f"point_{i:04d}.json"), _json_text(payload)
        )
        for lam, f, z in md:
            csv_rows.append(
                f"{_fmt(lam.real, prec)},{_fmt(lam.imag, prec)},"
                f"{_fmt(f, prec)},{_fmt(z, prec)}"
            )
    _atomic_write(os.path.join(args.output, "poles.csv"), "\n".join(csv_rows) + "\n")
    print(f"sampled {len(points)} point(s) -> {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _rel(a, b) -> float:
    na = np.linalg.norm(np.asarray(a) - np.asarray(b))
    nb = np.linalg.norm(np.asarray(b))
    return float(na / nb) if nb > 0 else float(na)


def cmd_validate(args) -> int:
    prec = _precision()
    model = load_model(args.model)
    lm = assemble(model)
    rng = np.random.default_rng(args.seed)
    points = [("nominal", {})]
    for i in range(args.points):
        points.append((f"random_{i}", sample_point(lm.parameters, rng)))

    from .assembly import sample_model  # local to keep module import light

    worst = 0.0
    lines = [f"model: {model.name} (order {lm.order})"]
    for label, pt in points:
        ev = NonlinearEvaluator(model, pt)
        a_fd, b_fd = fd_linearize(ev, FdConfig())
        a, b, _, _ = sample_model(lm, pt)
        ra, rb = _rel(a, a_fd), _rel(b, b_fd)
        worst = max(worst, ra, rb)
        lines.append(f"  {label}: rel_A={_fmt(ra, prec)} rel_B={_fmt(rb, prec)}")
    ok = worst <= VALIDATION_TOL
    lines.append(
        f"max_rel_delta: {_fmt(worst, prec)} "
        f"({'PASS' if ok else 'FAIL'}, tolerance {_fmt(VALIDATION_TOL, prec)})"
    )
    print("\n".join(lines))
    return EXIT_OK if ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mblft",
        description="Parameter-dependent multibody linearization in LFT form.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("equilibrium", help="solve and print the equilibrium")
    pe.add_argument("model", help="model file (YAML)")
    pe.set_defaults(func=cmd_equilibrium)

    pl = sub.add_parser("linearize", help="assemble the LFT model and export it")
    pl.add_argument("model", help="model file (YAML)")
    pl.add_argument("-o", "--output", required=True, help="export path (JSON)")
    pl.add_argument(
        "--no-reduce", action="store_true",
        help="skip the final occurrence-reduction pass",
    )
    pl.add_argument(
        "--strict-bounds", action="store_true",
        help="mark the export so sampling rejects out-of-bounds points",
    )
    pl.set_defaults(func=cmd_linearize)

    ps = sub.add_parser("sample", help="evaluate an export at parameter points")
    ps.add_argument("export", help="linear-model export (JSON)")
    grp = ps.add_mutually_exclusive_group(required=True)
    grp.add_argument("--point-file", help="JSON point or list of points")
    grp.add_argument(
        "--grid", help="grid spec 'name=lo:hi:N[,name=lo:hi:N...]'"
    )
    ps.add_argument("-o", "--output", required=True, help="output directory")
    ps.set_defaults(func=cmd_sample)

    pv = sub.add_parser("validate", help="cross-check against the nonlinear model")
    pv.add_argument("model", help="model file (YAML)")
    pv.add_argument("--points", type=int, default=0, help="random points (default 0)")
    pv.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    pv.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ModelFileError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except (FileNotFoundError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except _NUMERICAL_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
