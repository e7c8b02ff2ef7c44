#!/usr/bin/env python3
"""Diagnostics for the bilinear feedback equilibrium density.

Reports the Simpson box integral of the density at several resolutions and
box sizes, the matching Monte-Carlo box masses from the closed-form sampler,
and the conditional-independence factorization violation. The box mass
converges to about 0.952 on [-8, 8]^4 and grows roughly like 1 - c/R with
the box half-width R: the equilibrium law has Cauchy-like tails in Z and W,
so no finite box holds all of the mass.
"""
import argparse

import numpy as np

from dcgmarkov import (
    bilinear_feedback_density_grid,
    bilinear_feedback_solution,
    ci_factorization_check,
)


def boxed_mass(nodes: int, radius: float) -> float:
    axis = np.linspace(-radius, radius, nodes)
    h = axis[1] - axis[0]
    w = np.ones(nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= h / 3.0
    ys = axis[:, None, None]
    zs = axis[None, :, None]
    ws = axis[None, None, :]
    total = 0.0
    for i, x in enumerate(axis):
        f = bilinear_feedback_density_grid(x, ys, zs, ws)
        total += w[i] * np.einsum("j,k,l,jkl->", w, w, w, f)
    return float(total)


def monte_carlo_mass(n: int, radius: float, seed: int) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    draws = rng.standard_normal((4, n))
    sol = bilinear_feedback_solution(*draws)
    inside = np.ones(n, dtype=bool)
    for v in ("X", "Y", "Z", "W"):
        inside &= np.abs(sol[v]) <= radius
    p = float(inside.mean())
    return p, float(np.sqrt(p * (1 - p) / n))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=121)
    parser.add_argument("--samples", type=int, default=2_000_000)
    parser.add_argument("--seed", type=int, default=1729)
    args = parser.parse_args()

    print(f"{'radius':>7} {'nodes':>6} {'quadrature':>11} {'monte carlo':>12} {'mc sigma':>9}")
    for radius in (4.0, 8.0, 16.0):
        nodes = int(round(args.nodes * radius / 8))  # keep the mesh width constant
        nodes += 1 - nodes % 2
        quad = boxed_mass(nodes, radius)
        mc, sigma = monte_carlo_mass(args.samples, radius, args.seed)
        print(f"{radius:7.1f} {nodes:6d} {quad:11.5f} {mc:12.5f} {sigma:9.5f}")

    print("\nfactorization check, X vs Y at conditioning points:")
    for point in ({"Z": 0.0, "W": 0.0}, {"Z": 1.0, "W": 1.0}, {"Z": 2.0, "W": -1.0}):
        rep = ci_factorization_check(
            bilinear_feedback_density_grid,
            ("X", "Y", "Z", "W"),
            "X",
            "Y",
            [point],
            vectorized=True,
        )
        print(f"  (Z,W)=({point['Z']:+.1f},{point['W']:+.1f})  max violation = {rep.max_violation:.4f}")


if __name__ == "__main__":
    main()
