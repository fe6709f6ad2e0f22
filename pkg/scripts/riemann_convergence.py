#!/usr/bin/env python3
"""Riemann-sum reconstruction error of T x against mesh width for random operators.

Prints error / (mesh |x|) per mesh; the ratio should stay below one.
"""
import argparse

import numpy as np

from octspec.hmodule import ModuleVector
from octspec.qlop import CdMatrixOperator
from octspec.spectral import resolution_of_identity, riemann_reconstruct


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--v", type=int, default=2, choices=(0, 1, 2))
    ap.add_argument("--operators", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    meshes = [10.0 ** -k for k in range(1, 6)]
    worst = np.zeros(len(meshes))
    for _ in range(args.operators):
        T = CdMatrixOperator.random(args.n, args.v, rng, hermitian=True).to_operator()
        R = resolution_of_identity(T)
        x = ModuleVector.random(args.n, args.v, rng)
        target = T.matrix @ x.flat
        for i, mesh in enumerate(meshes):
            err = np.linalg.norm(riemann_reconstruct(R, x, mesh).flat - target)
            worst[i] = max(worst[i], err / (mesh * x.norm()))
    for mesh, w in zip(meshes, worst):
        print(f"mesh {mesh:8.0e}  worst error/(mesh |x|) {w:.4f}")


if __name__ == "__main__":
    main()
