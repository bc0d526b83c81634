#!/usr/bin/env python3
"""Cross-validate the arm's LFT linearization on a joint-angle grid.

Assembles the two-link arm once, then compares the LFT model evaluated at
each (theta1, theta2) grid point against a central finite-difference
linearization of the independent nonlinear model.  Prints the worst
relative Frobenius error for A and B and the total runtime.
"""
import argparse
import math
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from mblft.assembly import assemble, sample_model
from mblft.modelfile import load_model
from mblft.oracle import FdConfig, NonlinearEvaluator, fd_linearize

MODELS = pathlib.Path(__file__).resolve().parents[1] / "models"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5, help="grid size per axis")
    args = ap.parse_args()

    t0 = time.time()
    model = load_model(MODELS / "two_link_arm.yaml")
    lm = assemble(model)
    t_asm = time.time() - t0

    th1 = np.linspace(math.radians(45), math.radians(90), args.n)
    th2 = np.linspace(math.radians(45), math.radians(135), args.n)
    worst_a = worst_b = 0.0
    for a1 in th1:
        for a2 in th2:
            pt = {"t_t1": math.tan(a1 / 2), "t_t2": math.tan(a2 / 2)}
            ev = NonlinearEvaluator(model, pt)
            a_fd, b_fd = fd_linearize(ev, FdConfig())
            a, b, _, _ = sample_model(lm, pt)
            worst_a = max(worst_a, np.linalg.norm(a - a_fd) / np.linalg.norm(a_fd))
            worst_b = max(worst_b, np.linalg.norm(b - b_fd) / np.linalg.norm(b_fd))
    total = time.time() - t0
    print(f"assemble: {t_asm:.2f} s")
    print(f"grid {args.n}x{args.n}: worst rel A = {worst_a:.3e}, "
          f"worst rel B = {worst_b:.3e}, total {total:.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
