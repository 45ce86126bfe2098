"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Times each hot kernel on both backends over identical inputs, plus one
end-to-end feature-construction round with each backend forced via the
EVOFEAT_PURE_PYTHON switch (run in a subprocess so the switch takes effect).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from evofeat import kernels
from evofeat.exprtree import FULL, GROW, PrimitiveSet, sample_tree

ROUND_SCRIPT = """
import time
import numpy as np
from evofeat import kernels
from evofeat.dataset import Dataset, Task
from evofeat.fcs import FCSConfig, construct_features
from evofeat.learners import LearnerSpec
from evofeat.search import SearchConfig
r = np.random.default_rng(0)
X = r.normal(size=(400, 6))
y = (X[:, 0] * X[:, 1] > 0).astype(int)
cfg = FCSConfig(K=1, search=SearchConfig(algorithm="gomea-rt", population_size=50, eval_budget=1000),
                learner=LearnerSpec("{learner}"))
t = time.perf_counter()
construct_features(Dataset(X, y, Task.CLASSIFICATION), cfg)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def kernel_cases(rng):
    X = rng.normal(size=(1000, 8))
    prims = PrimitiveSet(8, -3.0, 3.0)
    trees = [sample_tree(FULL if i % 2 else GROW, 0, 4, rng, prims).prefix() for i in range(50)]
    prev = np.ascontiguousarray(rng.normal(size=(4, 1000)))
    v = rng.normal(size=1000)
    y_cls = rng.integers(0, 3, size=1000)
    y_reg = rng.normal(size=1000)
    samples = rng.integers(0, 1000, size=1000)

    def cases(m):
        gnb = m.gnb_fit(X, y_cls, 3, 1e-9)
        return {
            "eval_prefix x50": lambda: [m.eval_prefix(k, v_, X) for k, v_ in trees],
            "criteria_verdict": lambda: m.criteria_verdict(v, prev, 1e-10, 1e10, None),
            "gnb_fit": lambda: m.gnb_fit(X, y_cls, 3, 1e-9),
            "gnb_predict": lambda: m.gnb_predict(X, *gnb),
            "build_tree (class)": lambda: m.build_tree(X, y_cls.astype(float), samples, True, 3, 1, 3, 1),
            "build_tree (reg)": lambda: m.build_tree(X, y_reg, samples, False, 3, 5, 3, 1),
        }
    return cases


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-round", action="store_true", help="only time the individual kernels")
    args = ap.parse_args()

    found = kernels.backends()
    if "cython" not in found:
        print("compiled extension not built; only the python backend is available")
    cases = kernel_cases(np.random.default_rng(0))
    timings = {}
    for name, mod in found.items():
        for label, fn in cases(mod).items():
            n = 3
            timings.setdefault(label, {})[name] = min(timeit.repeat(fn, number=n, repeat=args.repeat)) / n

    print(f"{'kernel':<22}{'python ms':>12}{'cython ms':>12}{'speedup':>10}")
    for label, t in timings.items():
        py, cy = t["python"] * 1e3, t.get("cython")
        if cy is None:
            print(f"{label:<22}{py:>12.3f}{'-':>12}{'-':>10}")
        else:
            print(f"{label:<22}{py:>12.3f}{cy * 1e3:>12.3f}{py / (cy * 1e3):>9.1f}x")

    if args.skip_round:
        return
    print("\none construction round (gomea-rt, pop 50, budget 1000, 400 rows):")
    for learner in ("gnb", "cart"):
        for pure in (True, False) if "cython" in found else (True,):
            env = dict(os.environ)
            env.pop("EVOFEAT_PURE_PYTHON", None)
            if pure:
                env["EVOFEAT_PURE_PYTHON"] = "1"
            out = subprocess.run([sys.executable, "-c", ROUND_SCRIPT.format(learner=learner)], env=env,
                                 capture_output=True, text=True, check=True).stdout.split()
            print(f"  {learner:<5} {out[0]:<7} {float(out[1]):7.2f} s")


if __name__ == "__main__":
    main()
