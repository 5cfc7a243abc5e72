#!/usr/bin/env python3
"""Extract one horizontal layer of the SPE10 model 2 permeability as an asmg raster.

The input is the `spe_perm.dat` file of the SPE10 distribution: 60 x 220 x 85
cells, all kx values first, then ky, then kz, with x varying fastest and
z slowest. The output is the raster format read by `--coeff-file`: a line
"nx ny" followed by nx*ny positive values, row-major from the bottom-left cell.

    python3 scripts/extract_spe10_slice.py spe_perm.dat --layer 44 -o spe10_s44.txt
"""

import argparse
import sys

import numpy as np

NX, NY, NZ = 60, 220, 85


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("perm", help="path to spe_perm.dat")
    parser.add_argument("--layer", type=int, default=44, help="1-based layer index (default 44)")
    parser.add_argument("--component", choices=["kx", "ky", "kz"], default="kx")
    parser.add_argument("--floor", type=float, default=1e-3,
                        help="replace non-positive permeabilities by this value (default 1e-3)")
    parser.add_argument("-o", "--output", default="-", help="output raster path, '-' for stdout")
    args = parser.parse_args()

    if not 1 <= args.layer <= NZ:
        parser.error(f"layer must be in 1..{NZ}")
    values = np.loadtxt(args.perm).ravel()
    expected = 3 * NX * NY * NZ
    if values.size != expected:
        print(f"expected {expected} values, found {values.size}", file=sys.stderr)
        return 1
    comp = {"kx": 0, "ky": 1, "kz": 2}[args.component]
    perm = values.reshape(3, NZ, NY, NX)[comp, args.layer - 1]
    perm = np.where(perm > 0, perm, args.floor)

    out = sys.stdout if args.output == "-" else open(args.output, "w")
    with out:
        out.write(f"{NX} {NY}\n")
        for row in perm:
            out.write(" ".join(f"{v:.6e}" for v in row) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
