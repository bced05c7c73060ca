"""Command line entry point: ``midcourse {validate,run,pca,generate}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import schema_for, write_csv
from .errors import ConfigError, DataError, MidcourseError, NumericError
from .evaluation import table_json
from .experiment import ExperimentConfig, StageError, run_experiment, run_pca
from .synthetic import SyntheticSpec, generate_synthetic

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


def exit_code_for(err: BaseException) -> int:
    if isinstance(err, StageError):
        err = err.cause
    if isinstance(err, ConfigError):
        return EXIT_CONFIG
    if isinstance(err, NumericError):
        return EXIT_NUMERIC
    # DataError, DomainError, ShapeError: something about the data itself
    return EXIT_DATA


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    cfg.check_inputs()
    return cfg


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    info = {"status": "ok", "config_hash": cfg.config_hash(), "seed": cfg.seed,
            "models": [m.name for m in cfg.models]}
    if args.format == "json":
        print(json.dumps(info, indent=1))
    else:
        print(f"ok: {len(cfg.models)} model(s), seed {cfg.seed}, config hash {cfg.config_hash()[:12]}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load_config(args)
    log = None if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    arts = run_experiment(cfg, args.out_dir, log=log)
    if args.format == "json":
        print(json.dumps(table_json(arts.reports), indent=1))
    else:
        print(arts.table, end="")
        flagged = [r.model_name for r in arts.reports if r.flags.get("weak_recall_below_half")]
        if flagged:
            print(f"weak-student recall below 0.5: {', '.join(flagged)}")
        print(f"artifacts: {arts.out_dir}  manifest {arts.manifest['manifest_hash'][:12]}")
    return EXIT_OK


def cmd_pca(args) -> int:
    cfg = _load_config(args)
    path = run_pca(cfg, args.out_dir)
    print(path)
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = SyntheticSpec.load(args.spec)
    if args.seed is not None:
        spec = SyntheticSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    table = generate_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(table, out)
    schema_path = out.with_suffix(".schema.json")
    schema_path.write_text(json.dumps(schema_for(table).to_dict(), indent=1) + "\n", encoding="utf-8")
    print(f"{out}\n{schema_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="midcourse", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("config", help="experiment config (JSON)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--format", choices=("table", "json"), default="table")
        if out:
            sp.add_argument("--out-dir", help="artifact directory (default: config output_dir)")

    sp = sub.add_parser("validate", help="check a config and the files it references")
    common(sp, out=False)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("run", help="run the full experiment and write artifacts")
    common(sp)
    sp.add_argument("-q", "--quiet", action="store_true")
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("pca", help="export the 2-component PCA plot data")
    common(sp)
    sp.set_defaults(fn=cmd_pca)

    sp = sub.add_parser("generate", help="write a synthetic gradebook CSV and its schema")
    sp.add_argument("spec", help="synthetic spec (JSON)")
    sp.add_argument("out", help="output CSV path")
    sp.add_argument("--seed", type=int)
    sp.set_defaults(fn=cmd_generate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except MidcourseError as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
