"""Batch command line: apply effects to files, precompute families, plot curves.

    qbrush steer      --image in.png --source src.json --target tgt.json \
                      [--paste paste.json] --t 0.6 --timestep 25 --controls 2 \
                      --seed 7 --out out.png
    qbrush chem       --image in.png --stroke stroke.json --distance 0.735 \
                      --radius 6 --reps 10 --data-dir data/ --out out.png
    qbrush precompute --grid 1000 --min 0.725 --max 2.5 --data-dir data/ [--parallel N]
    qbrush curves     --kind dissociation|fidelity|controls ... --out curves.csv

Exit codes: 0 ok, 1 runtime failure, 2 usage error.  Every command is
deterministic given its flags and seed.  ``steer`` writes a JSON sidecar
next to the output PNG with the final fidelity, loss history and the full
trained steering (which ``curves --kind fidelity|controls`` consume).
``curves`` always writes CSV and renders the same data as a PNG plot
alongside it.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import control as ctl
from .brushes import (
    CanvasImage,
    SchemaError,
    apply_chemical,
    parse_chemical_params,
    parse_region,
    parse_steerable_params,
    parse_stroke,
    prepare_steerable,
)
from .vqe import (
    FamilyStore,
    FamilyStoreEmptyError,
    PrecomputeError,
    VqeConfig,
    precompute_grid,
)


class CliError(RuntimeError):
    """Runtime failure (exit code 1)."""


def _load_json(path: str, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as err:
        raise CliError(f"{what} file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise CliError(f"{what} file {path} is not valid JSON: {err}") from err


def _load_image(path: str) -> CanvasImage:
    try:
        return CanvasImage.open(path)
    except FileNotFoundError as err:
        raise CliError(f"image file not found: {path}") from err
    except Exception as err:
        raise CliError(f"could not read image {path}: {err}") from err


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _plot_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".png")


def _plot(csv_path: Path, draw) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    draw(ax)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    out = _plot_path(csv_path)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


# ---------------------------------------------------------------------------
# steer
# ---------------------------------------------------------------------------


def cmd_steer(args) -> int:
    image = _load_image(args.image)
    source = parse_region(_load_json(args.source, "source region"))
    target = parse_region(_load_json(args.target, "target region"))
    paste = parse_region(_load_json(args.paste, "paste region")) if args.paste else None
    params = parse_steerable_params(
        {"t": args.t, "timestep": args.timestep, "controls": args.controls}
    )
    config = ctl.TrainConfig(max_iters=args.iters, seed=args.seed)

    application = prepare_steerable(image, source, target, paste, params, config)
    out_image = application.evaluate(params.t)
    out_path = Path(args.out)
    out_image.save(out_path)

    trained = application.trained
    sidecar = {
        "final_fidelity": trained.final_fidelity,
        "loss_history": trained.loss_history.tolist(),
        "seed": args.seed,
        "params": {"t": args.t, "timestep": args.timestep, "controls": args.controls},
        "steering": ctl.trained_to_dict(trained),
    }
    sidecar_path = out_path.with_suffix(".json")
    sidecar_path.write_text(json.dumps(sidecar) + "\n")
    print(f"wrote {out_path} and {sidecar_path} (final fidelity {trained.final_fidelity:.4f})")
    return 0


# ---------------------------------------------------------------------------
# chem
# ---------------------------------------------------------------------------


def cmd_chem(args) -> int:
    image = _load_image(args.image)
    params = parse_chemical_params(
        {"bond_distance": args.distance, "repetitions": args.reps, "radius": args.radius}
    )
    stroke = parse_stroke(_load_json(args.stroke, "stroke"), radius_override=params.radius)
    store = FamilyStore(args.data_dir)
    try:
        family = store.load_nearest(params.bond_distance)
    except FamilyStoreEmptyError as err:
        raise CliError(
            f"{err}; run `qbrush precompute --data-dir {args.data_dir}` first"
        ) from err
    out = apply_chemical(image, stroke, params, family)
    out.save(args.out)
    print(f"used distance: {family.distance:.6f}")
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# precompute
# ---------------------------------------------------------------------------


def cmd_precompute(args) -> int:
    def report(distance, family):
        print(f"d={distance:.6f}  M={family.size}  E={family.energies[-1]:.10f}")

    try:
        computed = precompute_grid(
            args.data_dir,
            count=args.grid,
            lo=args.min,
            hi=args.max,
            config=VqeConfig(seed=args.seed),
            workers=args.parallel,
            report=report,
        )
    except PrecomputeError as err:
        for distance, message in err.failures:
            print(f"FAILED d={distance:.6f}: {message}", file=sys.stderr)
        raise CliError(str(err)) from err
    skipped = args.grid - len(computed)
    print(f"computed {len(computed)} families ({skipped} already present) in {args.data_dir}")
    return 0


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------


def cmd_curves(args) -> int:
    out_path = Path(args.out)
    if args.kind == "dissociation":
        if not args.data_dir:
            raise CliError("--kind dissociation needs --data-dir")
        store = FamilyStore(args.data_dir)
        try:
            distances = [float(d) for d in store.distances]
            if not distances:
                raise FamilyStoreEmptyError(f"no families in {args.data_dir}")
        except FamilyStoreEmptyError as err:
            raise CliError(str(err)) from err
        rows = []
        for d in distances:
            fam = store.load(d)
            rows.append([d, fam.hf_energy, fam.energies[-1], fam.exact_e0])
        _write_csv(out_path, ["distance", "hf", "vqe", "exact"], rows)

        def draw(ax):
            data = np.array(rows)
            ax.plot(data[:, 0], data[:, 1], label="Hartree-Fock")
            ax.plot(data[:, 0], data[:, 2], "--", label="VQE")
            ax.plot(data[:, 0], data[:, 3], ":", label="exact")
            ax.set_xlabel("bond distance (Angstrom)")
            ax.set_ylabel("energy (Hartree)")
            ax.legend()

    elif args.kind in ("fidelity", "controls"):
        if not args.sidecar:
            raise CliError(f"--kind {args.kind} needs --sidecar from a `qbrush steer` run")
        doc = _load_json(args.sidecar, "sidecar")
        if "steering" not in doc:
            raise CliError("sidecar carries no trained steering")
        trained = ctl.trained_from_dict(doc["steering"])
        if args.kind == "fidelity":
            ts = np.linspace(0.0, args.tmax, args.samples)
            states = ctl.evaluate_path(trained, ts)
            from .statevec import fidelity as fid

            rows = [[float(t), fid(s, trained.problem.target)] for t, s in zip(ts, states)]
            _write_csv(out_path, ["t", "fidelity"], rows)

            def draw(ax):
                data = np.array(rows)
                ax.plot(data[:, 0], data[:, 1])
                ax.axvline(1.0, color="gray", lw=0.8)
                ax.set_xlabel("t")
                ax.set_ylabel("fidelity to target")
                ax.set_ylim(0, 1.02)

        else:
            ts = ctl.control_times(trained.problem)
            u = trained.controller.evaluate(ts)
            header = ["t"] + [f"u_{i + 1}" for i in range(u.shape[1])]
            rows = [[float(t)] + [float(x) for x in row] for t, row in zip(ts, u)]
            _write_csv(out_path, header, rows)

            def draw(ax):
                for i in range(u.shape[1]):
                    ax.plot(ts, u[:, i], label=f"u_{i + 1}")
                ax.set_xlabel("t")
                ax.set_ylabel("control amplitude")
                ax.legend()

    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown curve kind {args.kind}")

    plot = _plot(out_path, draw)
    print(f"wrote {out_path} and {plot}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbrush", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    steer = sub.add_parser("steer", help="train and apply the region-steering effect")
    steer.add_argument("--image", required=True, help="input PNG")
    steer.add_argument("--source", required=True, help="source region JSON")
    steer.add_argument("--target", required=True, help="target region JSON")
    steer.add_argument("--paste", help="paste region JSON (defaults to the source region)")
    steer.add_argument("--t", type=float, required=True, help="evolution time (0=source, 1=target)")
    steer.add_argument("--timestep", type=int, default=25, help="splitting steps (default 25)")
    steer.add_argument("--controls", type=int, choices=(2, 3, 4), default=2,
                       help="qubits / control count")
    steer.add_argument("--seed", type=int, required=True, help="training seed")
    steer.add_argument("--iters", type=int, default=ctl.TrainConfig.max_iters,
                       help="training iterations")
    steer.add_argument("--out", required=True, help="output PNG (sidecar JSON written next to it)")
    steer.set_defaults(fn=cmd_steer)

    chem = sub.add_parser("chem", help="apply the VQE-trajectory stroke effect")
    chem.add_argument("--image", required=True)
    chem.add_argument("--stroke", required=True, help="stroke JSON (points + radius)")
    chem.add_argument("--distance", type=float, required=True, help="bond distance in Angstrom")
    chem.add_argument("--radius", type=float, help="stroke radius override (pixels)")
    chem.add_argument("--reps", type=int, default=0, help="circuit repetitions, 0-100")
    chem.add_argument("--data-dir", required=True, help="precomputed family directory")
    chem.add_argument("--out", required=True)
    chem.set_defaults(fn=cmd_chem)

    pre = sub.add_parser("precompute", help="precompute VQE families over a distance grid")
    pre.add_argument("--grid", type=int, default=1000, help="number of grid points")
    pre.add_argument("--min", type=float, default=0.725)
    pre.add_argument("--max", type=float, default=2.5)
    pre.add_argument("--data-dir", required=True)
    pre.add_argument("--parallel", type=int, help="worker processes")
    pre.add_argument("--seed", type=int, default=0)
    pre.set_defaults(fn=cmd_precompute)

    curves = sub.add_parser("curves", help="export CSV + plot for standard curves")
    curves.add_argument("--kind", required=True, choices=("dissociation", "fidelity", "controls"))
    curves.add_argument("--data-dir", help="family directory (dissociation)")
    curves.add_argument("--sidecar", help="steer sidecar JSON (fidelity/controls)")
    curves.add_argument("--tmax", type=float, default=1.5, help="fidelity sweep end")
    curves.add_argument("--samples", type=int, default=61, help="fidelity sweep points")
    curves.add_argument("--out", required=True, help="CSV path; plot lands alongside")
    curves.set_defaults(fn=cmd_curves)
    return parser


def _validate(parser: argparse.ArgumentParser, args) -> None:
    """Range checks that argparse choices can't express: usage errors, exit 2."""
    if args.command == "steer":
        if args.t < 0:
            parser.error("--t must be >= 0")
        if args.timestep < 1:
            parser.error("--timestep must be >= 1")
        if args.iters < 0:
            parser.error("--iters must be >= 0")
    elif args.command == "chem":
        if not 0 <= args.reps <= 100:
            parser.error("--reps must be in [0, 100]")
        if not 0.725 <= args.distance <= 2.5:
            parser.error("--distance must be in [0.725, 2.5]")
        if args.radius is not None and args.radius < 1:
            parser.error("--radius must be >= 1")
    elif args.command == "precompute":
        if args.grid < 2:
            parser.error("--grid must be >= 2")
        if not 0 < args.min < args.max:
            parser.error("--min/--max must satisfy 0 < min < max")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    try:
        return args.fn(args)
    except (CliError, SchemaError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # unexpected: still a runtime failure, not a traceback
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
