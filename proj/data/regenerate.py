#!/usr/bin/env python3
"""Regenerate the shipped compression-timing sample files.

The public benchmark tables for these algorithms publish fitted curves
(normalized execution time vs. compression ratio), not raw measurements.
The files here are resampled from those published power-law curves with a
small amount of Gaussian noise (sigma = 0.002) so that the fitting code has
realistic input. Fixed seeds keep the files reproducible; rerunning this
script must leave the repository unchanged.
"""

import random
from pathlib import Path

SIGMA = 0.002
POINTS = 40

# name -> (g1, g2, g3, omega_lo, omega_hi, seed)
CURVES = {
    "gzip_alice": (1.207e-15, 32.28, 0.3, 2.40, 2.86, 101),
    "gzip_asyoulik": (6.497e-19, 42.94, 0.303, 2.20, 2.63, 102),
    "bz2_alice": (0.076, 0.7117, 0.579, 1.50, 11.00, 103),
    "bz2_asyoulik": (0.178, 0.478, 0.437, 1.50, 11.00, 104),
    "xz_ubuntu": (6.441e-7, 7.062, 1e-7, 2.00, 7.50, 105),
    "xz_clearlinux": (1.492e-6, 6.646, 1e-6, 2.00, 7.50, 106),
    "zlib_ubuntu": (6.019e-76, 108.6, 0.240, 3.50, 4.91, 107),
    "zlib_clearlinux": (1.436e-68, 97.76, 0.205, 3.50, 4.93, 108),
}


def main() -> None:
    out_dir = Path(__file__).resolve().parent
    for name, (g1, g2, g3, lo, hi, seed) in CURVES.items():
        rng = random.Random(seed)
        lines = [
            f"# {name}: samples drawn from y = {g1:g}*x^{g2:g} + {g3:g}",
            f"# {POINTS} points on [{lo:g}, {hi:g}], noise sigma = {SIGMA:g}, seed = {seed}",
            "# omega  normalized_time",
        ]
        for i in range(POINTS):
            x = lo + (hi - lo) * i / (POINTS - 1)
            y = g1 * x**g2 + g3 + rng.gauss(0.0, SIGMA)
            lines.append(f"{x:.10g} {max(y, 0.0):.10g}")
        (out_dir / f"{name}.txt").write_text("\n".join(lines) + "\n")
        print(f"wrote {name}.txt")


if __name__ == "__main__":
    main()
