"""Compare the compiled and pure-Python kernels on representative inputs.

    python benchmarks/bench_kernels.py [--repeat N]

Prints the best-of-N wall time per kernel for each backend and the speedup.
"""
import argparse
import timeit

import numpy as np

from capdual import kernels, shapes
from capdual.discretize import triangulate
from capdual.metrics import build_graph


def cases():
    rng = np.random.default_rng(0)
    disk = shapes.disk()
    edges = disk.edges
    pts = rng.uniform(-1, 1, size=(20000, 2))
    g = build_graph(disk, triangulate(disk, 0.02), -0.5)
    csr = (g.indptr, g.indices, g.weights)
    return {
        "segments_min_distance (20k points, 256 edges)":
            lambda k: k.segments_min_distance(pts, *edges),
        "segment_weighted_integral (100 chords, exponent -0.5)":
            lambda k: [k.segment_weighted_integral(-0.9 + 0.018 * i, -0.3, 0.2, 0.8 - 0.01 * i, *edges, -0.5, 1e-8)
                       for i in range(100)],
        f"dijkstra ({g.n_nodes} nodes, {g.n_edges} edges)":
            lambda k: k.dijkstra(*csr, 0),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        print("compiled kernels are not built; only the Python backend is timed")
    print(f"{'kernel':58s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, fn in cases().items():
        tp = min(timeit.repeat(lambda: fn(kernels.python), number=1, repeat=args.repeat))
        if kernels.compiled is not None:
            tc = min(timeit.repeat(lambda: fn(kernels.compiled), number=1, repeat=args.repeat))
            print(f"{name:58s} {tp:11.4f} {tc:11.4f} {tp / tc:7.1f}x")
        else:
            print(f"{name:58s} {tp:11.4f} {'-':>11s} {'-':>8s}")


if __name__ == "__main__":
    main()
