"""Command-line entry point.

    contrail <stage|all> --config <file> [--seed N] [--force]
    contrail serve --config <file> [--port N] [--host H]
    contrail make-demo --out <dir> [--seed N]

Exit codes: 0 success, 1 user error, 2 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .pipeline import STAGES, Pipeline, PipelineConfig, PipelineError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contrail", description=__doc__.strip().splitlines()[0])
    parser.add_argument("command", choices=STAGES + ["all", "serve", "make-demo"])
    parser.add_argument("--config", help="pipeline config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--force", action="store_true", help="rerun the stage even if inputs are unchanged")
    parser.add_argument("--port", type=int, default=8321)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--out", help="output directory for make-demo")
    return parser


def _serve(config: PipelineConfig, host: str, port: int) -> None:
    import uvicorn

    from .claims import LabelStore, load_claims
    from .server import create_app

    pipe = Pipeline(config)
    store = pipe.store()  # errors with guidance if ingest has not run
    claims = load_claims(config.claims_path)
    labels_path = Path(config.labels_path)
    labels_path.parent.mkdir(parents=True, exist_ok=True)
    if not labels_path.exists():
        labels_path.touch()
    app = create_app(
        store,
        claims,
        LabelStore(labels_path),
        candidate_mode=config.candidate_mode,
        candidate_cap=config.candidate_cap,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "make-demo":
            if not args.out:
                print("make-demo requires --out", file=sys.stderr)
                return 1
            from .minicorpus import generate

            info = generate(args.out, seed=args.seed if args.seed is not None else 7)
            print(f"demo corpus written: {info['documents']} documents")
            print(f"config: {info['config']}")
            return 0

        if not args.config:
            print(f"{args.command} requires --config", file=sys.stderr)
            return 1
        config = PipelineConfig.load(args.config, seed_override=args.seed)

        if args.command == "serve":
            _serve(config, args.host, args.port)
            return 0

        pipe = Pipeline(config)
        if args.command == "all":
            pipe.run_all(force=args.force)
            for stage in STAGES:
                entry = pipe.manifest["stages"][stage]
                print(f"{stage}: {len(entry['outputs'])} artifacts ({entry['duration_s']}s)")
        else:
            entry = pipe.run(args.command, force=args.force)
            for rel in entry["outputs"]:
                print(rel)
        return 0
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
