"""Write the CSV data behind every figure into one directory.

    python3 scripts/reproduce_figures.py --outdir results/

The capacity comparison dominates the runtime (a few minutes with the default
32 restarts); pass --restarts 4 for a quick look.
"""
import argparse
import pathlib
import sys

from quantcap.cli import main as cli


def run(args: list[str]) -> None:
    code = cli(args)
    if code != 0:
        sys.exit(f"quantcap {' '.join(args)} failed with exit status {code}")


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", type=pathlib.Path, default=pathlib.Path("results"))
    ap.add_argument("--restarts", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    return ap.parse_args()


def main() -> None:
    opts = parse_args()
    opts.outdir.mkdir(parents=True, exist_ok=True)
    out = lambda name: str(opts.outdir / name)
    run(["fig", "cond-entropy", "--out", out("cond_entropy.csv")])
    run(["fig", "u0-threshold", "--out", out("u0_threshold.csv")])
    run(["fig", "capacity-compare", "--restarts", str(opts.restarts),
         "--seed", str(opts.seed), "--out", out("capacity_compare.csv")])
    run(["fig", "ihara-bounds", "--out", out("ihara_bounds.csv")])
    for sigma, p in [(1.0, 0.5), (1.0, 2.0), (2.0, 1.0)]:
        run(["error-pdf", "--sigma", str(sigma), "--resolution", str(p),
             "--samples", "1000000", "--seed", str(opts.seed),
             "--out", out(f"error_pdf_sigma{sigma:g}_p{p:g}.csv")])
    print(f"wrote CSV files to {opts.outdir}/", file=sys.stderr)


if __name__ == "__main__":
    main()
