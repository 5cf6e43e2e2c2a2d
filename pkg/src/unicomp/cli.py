"""``unicomp`` command line."""
from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .bench import CorpusManifest, ManifestError, UsageError, bench, grid_search
from .container import (ALL_COMPRESSORS, CorruptionError, FormatError, compress_file,
                        decompress_file, parse_compressor)
from .models import ModelError


def _floats(text: str):
    return [float(x) for x in text.split(",") if x.strip()]


def _depths(text: str):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _compressor(args, name=None):
    return parse_compressor(name or args.model, args.depth, args.alpha, args.beta,
                            args.concentration)


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--depth", type=int, help="PPM maximum context order")
    p.add_argument("--alpha", type=float, help="PPMG strength parameter")
    p.add_argument("--beta", type=float, help="PPMG discount parameter")
    p.add_argument("--concentration", type=float,
                   help="Polya tree prior strength (alpha_i + beta_i per node)")


def _write(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_compress(args) -> int:
    stats = compress_file(args.input, args.output, _compressor(args))
    print(f"{args.input}: {stats.input_bytes} -> {stats.output_bytes} bytes "
          f"({stats.bits_per_byte:.3f} bits/byte, {stats.seconds:.2f}s, {stats.compressor})",
          file=sys.stderr)
    return 0


def cmd_decompress(args) -> int:
    decompress_file(args.input, args.output)
    return 0


def cmd_bench(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    manifest.check()
    names = args.model or [c.name for c in ALL_COMPRESSORS]
    ids = [_compressor(args, n) for n in names]
    report = bench(manifest, ids, jobs=args.jobs)
    if args.format == "csv":
        text = report.to_csv(mark_best=args.mark_best)
    else:
        text = report.to_table(mark_best=args.mark_best)
    _write(text, args.out)
    return 1 if report.failures else 0


def cmd_grid(args) -> int:
    manifest = CorpusManifest.load(args.manifest)
    manifest.check()
    algorithm, base = args.model.split(":", 1) if ":" in args.model else (args.model, "")
    best, points = grid_search(manifest, algorithm, base, _depths(args.depths),
                               _floats(args.alphas), _floats(args.betas), args.concentration)
    lines = ["depth,alpha,beta,mean_bpb"]
    lines += [f"{p.depth},{p.alpha},{p.beta},{p.mean_bpb:.3f}" for p in points]
    _write("\n".join(lines) + "\n", args.out)
    print(f"best: depth={best.depth} alpha={best.alpha} beta={best.beta} "
          f"mean={best.mean_bpb:.3f} bits/byte", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unicomp", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a file into a UCMP container")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--model", default="ppm:polya_token",
                   help="compressor id, e.g. ppm:uniform_byte or lzw:none (default %(default)s)")
    _add_params(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="restore a file from a UCMP container")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("bench", help="bits/byte table over a corpus manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", action="append",
                   help="compressor id; repeat for several (default: all seven)")
    _add_params(p)
    p.add_argument("--format", choices=("csv", "table"), default="table")
    p.add_argument("--mark-best", action="store_true", help="star the best figure in each row")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("grid-search", help="pick PPM parameters by mean bits/byte")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", default="ppm:uniform_byte")
    p.add_argument("--depths", default="2-6", help="e.g. 3-6 or 4,6")
    p.add_argument("--alphas", default="0,0.1,0.5,1")
    p.add_argument("--betas", default="0,0.25,0.5,0.75")
    p.add_argument("--concentration", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ModelError) as exc:
        parser.error(str(exc))
    except (FormatError, CorruptionError, ManifestError, OSError) as exc:
        print(f"unicomp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
