"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in a fresh interpreter because ``HERALDIC_NUMBA`` is read
at import time::

    python3 benchmarks/bench_kernels.py
"""
from __future__ import annotations

import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, timeit
import numpy as np
from heraldic import _kernels as K
from heraldic.fock import FockBasis, element_arrays, evolve_vectors
from heraldic.ga import GenomeEvaluator
from heraldic.genome import GenomeLayout, random_genome
from heraldic.mesh import build_mesh
from heraldic.metrics import PNR, metrics_report
from heraldic.schemes import CZ, builtin

rng = np.random.default_rng(0)
scheme = builtin("CZ_1_16")
basis = FockBasis.get(scheme.mode_count, 4)
vecs = rng.normal(size=(basis.dim, 4)) + 0j
packed = element_arrays(scheme.elements)
layout = GenomeLayout(3, 6)
evaluator = GenomeEvaluator(layout, CZ, PNR, 6)
genomes = [random_genome(layout, rng).genes for _ in range(64)]
design = build_mesh("clements", 6)
batch = rng.uniform(0, 2 * np.pi, size=(128, design.n_params))

def best(stmt, number):
    stmt()  # warm up, includes compilation
    return min(timeit.repeat(stmt, number=number, repeat=5)) / number

print(json.dumps({
    "backend": "numba" if K.USE_NUMBA else "numpy",
    "evolve CZ_1_16 (4 vectors)": best(lambda: evolve_vectors(scheme.elements, basis, vecs, packed), 200),
    "metrics_report CZ_1_16": best(lambda: metrics_report(scheme, CZ), 50),
    "GA evaluation (d=3, 6 modes)": best(lambda: [evaluator(g) for g in genomes], 5) / len(genomes),
    "Clements N=6 unitaries (batch of 128)": best(lambda: design.unitaries(batch), 20),
}))
"""


def run(backend: str) -> dict:
    env = dict(os.environ, HERALDIC_NUMBA="1" if backend == "numba" else "0")
    out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    results = {b: run(b) for b in ("numba", "numpy")}
    keys = [k for k in results["numba"] if k != "backend"]
    width = max(map(len, keys))
    print(f"{'workload':<{width}}  {'numba':>12}  {'numpy':>12}  {'speedup':>8}")
    for k in keys:
        a, b = results["numba"][k], results["numpy"][k]
        print(f"{k:<{width}}  {a * 1e6:>10.1f}us  {b * 1e6:>10.1f}us  {b / a:>7.1f}x")


if __name__ == "__main__":
    main()
