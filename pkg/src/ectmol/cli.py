"""Command-line interface: ``ectmol <command> ...``.

Exit codes: 0 success, 2 input/parse error, 3 data-contract error,
64 usage error. The seed falls back to ``$ECTMOL_SEED``, then 0.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

from ectmol import __version__
from ectmol.dataset_io import (
    FeatureTable,
    align_rows,
    apply_target_transform,
    concat_features,
    load_csv,
    load_fingerprint_matrix,
    read_feature_table,
    write_ect_binary,
    write_ect_csv,
)
from ectmol.ect import (
    DEFAULT_DIRECTIONS,
    DEFAULT_THRESHOLDS,
    GENERATOR_ID,
    ThresholdGrid,
    compute_ect,
    ect_batch,
    sample_directions,
)
from ectmol.errors import EctMolError, SmilesError
from ectmol.features import NUM_FEATURES, NormalizationStats, featurize, normalize_dataset
from ectmol.plot import ect_heatmap_svg, ecc_svg
from ectmol.regression import DEFAULT_FOLDS, DEFAULT_LAMBDA, CVConfig, cross_validate, sensitivity_sweep
from ectmol.smiles import euler_characteristic, molecule_from_smiles
from ectmol.synthetic import write_topology_csv

EXIT_USAGE = 64
SEED_ENV = "ECTMOL_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return value


def _int_list(text: str) -> list[int]:
    parts = text.split(",")
    if not text.strip() or any(not p.strip() for p in parts):
        raise argparse.ArgumentTypeError(f"malformed list: {text!r}")
    return [_positive_int(p.strip()) for p in parts]


def _seed(args) -> int:
    raw = args.seed if args.seed is not None else os.environ.get(SEED_ENV, "0")
    try:
        seed = int(raw)
    except ValueError:
        raise UsageError(f"seed must be an integer, got {raw!r}") from None
    if not 0 <= seed < 2**64:
        raise UsageError(f"seed must fit in an unsigned 64-bit integer, got {seed}")
    return seed


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class _Outputs:
    """Stage output files under temporary names; publish all or none."""

    def __init__(self):
        self.staged: list[tuple[Path, Path]] = []

    def path(self, target) -> Path:
        target = Path(target)
        tmp = target.with_name(target.name + ".partial")
        self.staged.append((tmp, target))
        return tmp

    def final(self, tmp: Path) -> Path:
        return next(target for t, target in self.staged if t == tmp)

    def commit(self) -> list[Path]:
        for tmp, target in self.staged:
            os.replace(tmp, target)
        return [target for _, target in self.staged]

    def rollback(self) -> None:
        for tmp, _ in self.staged:
            tmp.unlink(missing_ok=True)


def _run_with_outputs(body) -> None:
    outputs = _Outputs()
    try:
        body(outputs)
    except BaseException:
        outputs.rollback()
        raise
    outputs.commit()


def _write_manifest(path, command: str, args, seeds: dict, inputs, outputs) -> None:
    """``outputs`` holds ``(final_path, staged_path)`` pairs."""
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    doc = {
        "tool": "ectmol",
        "version": __version__,
        "command": command,
        "flags": flags,
        "seeds": seeds,
        "direction_generator": GENERATOR_ID,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(final): _sha256(tmp) for final, tmp in outputs},
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def _featurize_dataset(ds, largest_only: bool):
    graphs = []
    for rec in ds.records:
        try:
            graphs.append(molecule_from_smiles(rec.smiles, largest_only))
        except SmilesError as exc:
            raise type(exc)(f"line {rec.row_origin}: {exc}") from exc
    normalized, stats = normalize_dataset(
        [featurize(g, rec.mol_id) for g, rec in zip(graphs, ds.records)])
    return [(f, g.edge_index()) for f, g in zip(normalized, graphs)], stats


# --- commands ---------------------------------------------------------------


def cmd_parse(args) -> int:
    if args.file:
        try:
            lines = Path(args.file).read_text().splitlines()
        except OSError as exc:
            print(f"error: IoFailure: {exc}", file=sys.stderr)
            return 2
        items = [(i + 1, ln.split()[0] if ln.split() else "") for i, ln in enumerate(lines)]
        items = [(n, s) for n, s in items if s]
    elif args.smiles is not None:
        items = [(1, args.smiles)]
    else:
        raise UsageError("give a SMILES string or --file")
    for line, smiles in items:
        try:
            g = molecule_from_smiles(smiles, args.largest_component)
        except SmilesError as exc:
            print(f"line {line}: {type(exc).__name__}: {exc}", file=sys.stderr)
            return exc.exit_code
        print(f"atoms={g.num_atoms} bonds={g.num_bonds} "
              f"chi={euler_characteristic(g)} components={g.num_components()}")
    if args.manifest:
        _write_manifest(args.manifest, "parse", args, {},
                        [args.file] if args.file else [], [])
    return 0


def cmd_ect(args) -> int:
    seed = _seed(args)
    ds, report = load_csv(args.input, args.smiles_column, args.target_column, args.id_column)
    molecules, stats = _featurize_dataset(ds, args.largest_component)
    dirs = sample_directions(NUM_FEATURES, args.dirs, seed)
    grid = ThresholdGrid.default(args.thresholds)
    table = ect_batch(molecules, dirs, grid, jobs=args.jobs)
    out = Path(args.out)

    def body(outputs: _Outputs) -> None:
        tmp = outputs.path(out)
        if args.format == "bin":
            write_ect_binary(tmp, table, args.dirs, args.thresholds)
        else:
            write_ect_csv(tmp, ds.mol_ids, table)
        stats_tmp = outputs.path(out.with_name(out.name + ".norm.json"))
        stats.save(stats_tmp)
        ingest_tmp = outputs.path(out.with_name(out.name + ".ingest.json"))
        ingest_tmp.write_text(report.to_json())
        _write_manifest(outputs.path(_manifest_path(out)), "ect", args,
                        {"directions": seed}, [args.input],
                        [(outputs.final(p), p) for p in (tmp, stats_tmp, ingest_tmp)])

    _run_with_outputs(body)
    print(f"wrote {table.shape[0]} x {table.shape[1]} ECT table to {out}", file=sys.stderr)
    return 0


def _load_targets(args):
    ds, _ = load_csv(args.targets, args.smiles_column, args.target_column, args.id_column)
    return apply_target_transform(ds, "log10" if args.log10_target else "identity")


def cmd_cv(args) -> int:
    seed = _seed(args)
    ds = _load_targets(args)
    ect = read_feature_table(args.features)
    values = align_rows(ect.mol_ids, ect.values, ds.mol_ids, what=args.features)
    table = FeatureTable(values, tuple(ds.mol_ids), ect.blocks)
    inputs = [args.features, args.targets]
    if args.fingerprint:
        fp = load_fingerprint_matrix(args.fingerprint, ds.mol_ids)
        table = concat_features(table, fp, "fingerprint")
        inputs.append(args.fingerprint)
    label = args.label or table.label
    report = cross_validate(table.values, ds.targets, CVConfig(args.folds, seed, args.lam),
                            jobs=args.jobs, representation=label, dataset=ds.name)
    report.blocks = [tuple(b) for b in table.blocks]
    report.target_transform = ds.transform
    if args.out:
        prefix = Path(args.out)

        def body(outputs: _Outputs) -> None:
            json_tmp = outputs.path(prefix.with_name(prefix.name + ".json"))
            json_tmp.write_text(report.to_json())
            text_tmp = outputs.path(prefix.with_name(prefix.name + ".txt"))
            text_tmp.write_text(report.to_text())
            _write_manifest(outputs.path(_manifest_path(prefix)), "cv", args,
                            {"shuffle": seed}, inputs,
                            [(outputs.final(p), p) for p in (json_tmp, text_tmp)])

        _run_with_outputs(body)
    sys.stdout.write(report.to_text())
    return 0


def cmd_plot(args) -> int:
    seed = _seed(args)
    g = molecule_from_smiles(args.input, args.largest_component)
    raw = featurize(g)
    if args.stats:
        rows = NormalizationStats.load(args.stats).apply([raw])[0]
    else:
        rows = normalize_dataset([raw])[0][0]
    dirs = sample_directions(NUM_FEATURES, args.dirs, seed)
    grid = ThresholdGrid.default(args.thresholds)
    ect = compute_ect(rows, g.edge_index(), dirs, grid)
    if args.heatmap:
        svg = ect_heatmap_svg(ect.grid, title=args.input)
    else:
        if not 0 <= args.direction_index < args.dirs:
            raise UsageError(f"--direction-index must be in [0, {args.dirs})")
        svg = ecc_svg(grid.values, ect.grid[args.direction_index],
                      title=f"{args.input}, direction {args.direction_index}")
    out = Path(args.out)

    def body(outputs: _Outputs) -> None:
        tmp = outputs.path(out)
        tmp.write_text(svg)
        _write_manifest(outputs.path(_manifest_path(out)), "plot", args,
                        {"directions": seed}, [args.stats] if args.stats else [],
                        [(out, tmp)])

    _run_with_outputs(body)
    return 0


def cmd_sweep(args) -> int:
    seed = _seed(args)
    ds, _ = load_csv(args.input, args.smiles_column, args.target_column, args.id_column)
    ds = apply_target_transform(ds, "log10" if args.log10_target else "identity")
    molecules, _ = _featurize_dataset(ds, args.largest_component)
    rows = sensitivity_sweep(molecules, ds.targets, args.dirs_list, args.thresholds_list,
                             CVConfig(args.folds, seed, args.lam), seed=seed, jobs=args.jobs)
    out = Path(args.out)
    lines = ["directions,thresholds,n_features,mean_rmse,std_rmse,mean_r2,std_r2"]
    for r in rows:
        lines.append(",".join([str(r.directions), str(r.thresholds), str(r.n_features),
                               repr(r.mean_rmse), repr(r.std_rmse),
                               repr(r.mean_r2), repr(r.std_r2)]))

    def body(outputs: _Outputs) -> None:
        tmp = outputs.path(out)
        tmp.write_text("\n".join(lines) + "\n")
        _write_manifest(outputs.path(_manifest_path(out)), "sweep", args,
                        {"directions": seed, "shuffle": seed}, [args.input], [(out, tmp)])

    _run_with_outputs(body)
    for r in rows:
        print(f"D={r.directions:<4d} T={r.thresholds:<4d} RMSE={r.mean_rmse:.4f} "
              f"R2={r.mean_r2:.4f} ({r.seconds:.2f}s)")
    return 0


def cmd_synth(args) -> int:
    seed = _seed(args)
    out = Path(args.out)

    def body(outputs: _Outputs) -> None:
        tmp = outputs.path(out)
        write_topology_csv(tmp, args.n, seed, args.noise)
        _write_manifest(outputs.path(_manifest_path(out)), "synth", args,
                        {"molecules": seed}, [], [(out, tmp)])

    _run_with_outputs(body)
    return 0


# --- argument parsing -------------------------------------------------------


def _add_dataset_flags(p) -> None:
    p.add_argument("--smiles-column", default="smiles")
    p.add_argument("--target-column", default="target")
    p.add_argument("--id-column", default=None,
                   help="molecule id column (default: 'mol_id' if present, else line number)")


def _add_cv_flags(p) -> None:
    p.add_argument("--folds", type=int, default=DEFAULT_FOLDS)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--log10-target", action=argparse.BooleanOptionalAction, default=True,
                   help="model log10 of the target (default on)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ectmol", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ectmol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="summarize the graph of a SMILES string")
    p.add_argument("smiles", nargs="?")
    p.add_argument("--file", help="one SMILES per line")
    p.add_argument("--largest-component", action="store_true")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("ect", help="compute the ECT feature table of a dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dirs", type=_positive_int, default=DEFAULT_DIRECTIONS)
    p.add_argument("--thresholds", type=_positive_int, default=DEFAULT_THRESHOLDS)
    p.add_argument("--seed", default=None)
    p.add_argument("--format", choices=("csv", "bin"), default="csv")
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--largest-component", action="store_true")
    _add_dataset_flags(p)
    p.set_defaults(func=cmd_ect)

    p = sub.add_parser("cv", help="cross-validate ridge regression on a feature table")
    p.add_argument("--features", required=True)
    p.add_argument("--fingerprint")
    p.add_argument("--targets", required=True, help="dataset CSV with the targets")
    p.add_argument("--seed", default=None)
    p.add_argument("--out", help="report prefix (writes PREFIX.json and PREFIX.txt)")
    p.add_argument("--label")
    p.add_argument("--jobs", type=_positive_int, default=1)
    _add_cv_flags(p)
    _add_dataset_flags(p)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("plot", help="render an ECC or ECT heatmap as SVG")
    p.add_argument("--input", required=True, help="SMILES string")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--direction-index", type=int)
    mode.add_argument("--heatmap", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--dirs", type=_positive_int, default=DEFAULT_DIRECTIONS)
    p.add_argument("--thresholds", type=_positive_int, default=DEFAULT_THRESHOLDS)
    p.add_argument("--seed", default=None)
    p.add_argument("--stats", help="normalization stats from 'ect'")
    p.add_argument("--largest-component", action="store_true")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("sweep", help="CV over a grid of direction/threshold counts")
    p.add_argument("--input", required=True)
    p.add_argument("--dirs-list", type=_int_list, required=True)
    p.add_argument("--thresholds-list", type=_int_list, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", default=None)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--largest-component", action="store_true")
    _add_cv_flags(p)
    _add_dataset_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="write the synthetic topology dataset")
    p.add_argument("--n", type=_positive_int, default=200)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "folds", 2) < 2:
        print("ectmol: error: --folds must be >= 2", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ectmol: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EctMolError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
