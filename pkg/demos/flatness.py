"""Projective flatness of the convex damping c/t.

The normal form of x'' + (c/t) x' = 0 has Q = c(2 - c)/(4 t^2); its solution
ratio is a Moebius map, so its Schwarzian vanishes, only for c in {0, 2}.

Run: python3 demos/flatness.py
"""

import numpy as np

from naimlab import integrators, projective


def main():
    for p in projective.flatness_scan(np.linspace(0.0, 3.0, 7)):
        mark = "flat" if p.is_flat else ""
        print(f"  c = {p.c:4.2f}   |Sch| at t=2 = {p.magnitude:.3e}  {mark}")
    roots = projective.flat_dampings(np.linspace(-0.7, 3.1, 7))
    print("bisected flat dampings:", ", ".join(f"{r:.5f}" for r in roots))

    print("Cayley momentum and its index-shifted form:")
    for k in (1, 2, 3, 10, 100):
        cay, shifted = integrators.cayley_convex_coefficient(k)
        print(f"  k = {k:3d}   (k-1)/(k+1) = {cay:.4f}   (k-1)/(k+2) = {shifted:.4f}")


if __name__ == "__main__":
    main()
