"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ..errors import DataError, NumericalError
from . import stages
from .config import RunConfig
from .synth import default_spec, synth_corpus

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _smoothing(text):
    return "auto" if text.lower() == "auto" else float(text)


def _add_config_args(p):
    g = p.add_argument_group("run configuration")
    g.add_argument("--out", dest="out_dir", default="run", help="output directory")
    g.add_argument("--sample-rate", type=int, default=16000)
    g.add_argument("--sigma", type=float, default=0.005, help="window std (s)")
    g.add_argument("--half-width", type=int, default=80, help="window half length (samples)")
    g.add_argument("--hop", type=int, default=80)
    g.add_argument("--floor", type=float, default=1e-10, help="power floor before dB")
    g.add_argument("--n-freq", type=int, default=81)
    g.add_argument("--n-time", type=int, default=100)
    g.add_argument("--smoothing", type=_smoothing, default="auto", help="'auto' or s >= 0")
    g.add_argument("--warp-lambda", type=float, default=None,
                   help="registration penalty; default scales with the data")
    g.add_argument("--lambda-scale", type=float, default=1e-3)
    g.add_argument("--n-interior", type=int, default=20, help="interior warp knots")
    g.add_argument("--no-register", dest="register", action="store_false")
    g.add_argument("--permutations", "-M", dest="M", type=int, default=1000)
    g.add_argument("--rel-tol", type=float, default=1e-10)


def build_parser():
    parser = _Parser(prog="spectromorph", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("preprocess", help="recordings -> registered surfaces")
    p.add_argument("manifest")
    _add_config_args(p)

    p = sub.add_parser("estimate", help="word means and separable covariances")
    _add_config_args(p)

    p = sub.add_parser("test", help="permutation tests")
    p.add_argument("--target", choices=["mean", "freq_cov", "time_cov", "all"], default="all")
    p.add_argument("--group-by", choices=["word", "language"], default="word")
    p.add_argument("--seed", type=int, required=True)
    _add_config_args(p)

    p = sub.add_parser("morph", help="export a path of surfaces and WAVs")
    p.add_argument("--language", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--speaker", required=True)
    p.add_argument("--to", dest="dst_language", required=True)
    p.add_argument("--x", dest="xs", type=float, nargs="+",
                   default=[0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
    p.add_argument("--kind", choices=["morph", "mean", "cross", "paired"], default="morph")
    p.add_argument("--paired-speaker", default=None)
    p.add_argument("--flip", action="store_true", help="reverse the paired-path weights")
    p.add_argument("--name", default=None)
    _add_config_args(p)

    p = sub.add_parser("plot", help="render an FGRD1 artifact as PGM/CSV/PNG")
    p.add_argument("artifact")
    p.add_argument("out_prefix")

    p = sub.add_parser("synth-corpus", help="write a synthetic corpus and manifest")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--spec", default=None, help="JSON file overriding the default spec")
    p.add_argument("--speakers", type=int, default=None)
    return parser


def _config(args) -> RunConfig:
    return RunConfig.from_dict(vars(args))


def run(args) -> int:
    cmd = args.command
    if cmd == "preprocess":
        rec = stages.preprocess(args.manifest, _config(args))
        print(f"{rec['n_surfaces']} surfaces, {rec['n_failures']} failures")
    elif cmd == "estimate":
        rec = stages.estimate(_config(args))
        for lang, d in rec["models"].items():
            print(f"{lang}\t{d}")
        if not rec["models"]:
            raise DataError("no language had enough residuals")
    elif cmd == "test":
        targets = ["mean", "freq_cov", "time_cov"] if args.target == "all" else [args.target]
        rec = stages.run_tests(_config(args), targets, args.group_by)
        for target, row in rec["tables"].items():
            print(target, " ".join(f"{k}={v:.3f}" for k, v in sorted(row.items())))
    elif cmd == "morph":
        rec = stages.morph_token(_config(args), args.language, args.word, args.speaker,
                                 args.dst_language, args.xs, args.kind,
                                 args.paired_speaker, args.flip, args.name)
        for step in rec["steps"]:
            print(f"x={step['x']:g}\t{step['wav']}")
        if rec["nearest"]:
            print(f"nearest {args.dst_language} token: {rec['nearest']['token']}")
    elif cmd == "plot":
        for path in stages.plot_artifact(args.artifact, args.out_prefix):
            print(path)
    elif cmd == "synth-corpus":
        spec = default_spec()
        if args.spec:
            with open(args.spec, encoding="utf-8") as fh:
                spec.update(json.load(fh))
        if args.speakers is not None:
            spec["n_speakers"] = args.speakers
        entries = synth_corpus(spec, args.seed, args.out_dir)
        print(f"{len(entries)} recordings written to {args.out_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help (0) or a usage error (1)
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
