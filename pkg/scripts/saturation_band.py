"""Compare the searched saturation capacity for different input confinements.

For sigma^2 = 1 and p = 2 this prints C_s - I_s as the allowed input range grows
from the quantizer's full scale [0, (N-1)p] (guard 0) to half a cell beyond it
on either side (guard 0.5). A wider range lets the search put mass in the
outer saturated region, so the gap to the lattice-input value widens.
"""
import argparse
import warnings

from quantcap.capacity import saturation_capacity_search, saturation_lower_bound
from quantcap.quantizer import GaussianNoise, QuantizerSpec


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[4, 8, 16])
    ap.add_argument("--guards", type=float, nargs="+", default=[0.0, 0.25, 0.5])
    ap.add_argument("--restarts", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    opts = ap.parse_args()

    noise = GaussianNoise(1.0)
    print("N,guard,I_s_bits,C_s_bits,gap_bits")
    for n in opts.levels:
        spec = QuantizerSpec(n, 2.0, "saturation")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            i_s = saturation_lower_bound(spec, noise).capacity_bits
        for guard in opts.guards:
            cs = saturation_capacity_search(spec, noise, restarts=opts.restarts,
                                            seed=opts.seed, guard=guard).capacity_bits
            print(f"{n},{guard:g},{i_s:.6f},{cs:.6f},{cs - i_s:.6f}", flush=True)


if __name__ == "__main__":
    main()
