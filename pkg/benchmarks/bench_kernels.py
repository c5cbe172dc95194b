"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-N wall time per kernel and backend, plus the speedup.
"""
import argparse
import timeit

import numpy as np

from eqm_lab import _kernels
from eqm_lab._kernels import pure
from eqm_lab.twoslit import SlitGeometry, _cdf_terms, path_amplitude


def cases(rng):
    vecs = rng.normal(size=(16, 3))
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    amps = pure.elementary_amplitudes(vecs)
    sub = np.array([3, 11, 7], dtype=np.intp)
    amp = path_amplitude(SlitGeometry.standard())
    terms = _cdf_terms(amp)
    runs = 200_000
    phi = rng.uniform(0, 2 * np.pi, runs)
    u = rng.random(runs)
    return {
        "elementary_amplitudes (N=16)": lambda k: k.elementary_amplitudes(vecs),
        "project_amplitudes (N=16 -> 3)": lambda k: k.project_amplitudes(amps, 16, sub),
        "sample_inverse_cdf (2e5 runs)": lambda k: k.sample_inverse_cdf(*terms, np.cos(phi), np.sin(phi), u),
    }


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    backends = [("numpy", pure)]
    if _kernels.compiled is not None:
        backends.append(("cython", _kernels.compiled))
    else:
        print("compiled kernels not available; timing the fallback only")
    print(f"{'kernel':34s}" + "".join(f"{name:>12s}" for name, _ in backends) + "   speedup")
    for label, fn in cases(rng).items():
        times = [min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for _, k in backends]
        speed = f"{times[0] / times[1]:8.1f}x" if len(times) == 2 else ""
        print(f"{label:34s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + "   " + speed)


if __name__ == "__main__":
    main()
