"""Command line wrapper around extract().

Exit codes follow the consuming kit's convention: 0 success, 1 runtime
failure (e.g. weights not downloadable), 2 usage error (bad flags,
missing or empty input directory, undecodable image).
"""

import argparse
import sys
from pathlib import Path

from .errors import ExtractError, WeightsUnavailableError
from .extract import TOKEN_SOURCES, ExtractionJob, extract


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="gvrextract",
        description="export per-patch transformer features as GVRF files")
    ap.add_argument("--input-dir", type=Path, required=True)
    ap.add_argument("--output-dir", type=Path, required=True)
    ap.add_argument("--model", choices=("dino", "random"), default="dino")
    ap.add_argument("--patch-size", type=int, choices=(8, 16), default=8)
    ap.add_argument("--resize", type=int, default=320)
    ap.add_argument("--tokens", choices=TOKEN_SOURCES, default="output")
    args = ap.parse_args(argv)

    if not args.input_dir.is_dir():
        print(f"error: {args.input_dir} is not a directory", file=sys.stderr)
        return 2
    try:
        job = ExtractionJob(input_dir=args.input_dir,
                            output_dir=args.output_dir, model=args.model,
                            patch_size=args.patch_size, resize=args.resize,
                            tokens=args.tokens)
        rows = extract(job)
    except WeightsUnavailableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for row in rows:
        print(f"{row['image_id']} {row['grid']} dim={row['dim']}")
    print(f"wrote {len(rows)} files to {args.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
