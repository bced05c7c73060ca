"""Compare backprop gradients with central finite differences for both networks.

    python3 scripts/gradient_check.py [--seed N] [--step 1e-5]
"""
import argparse

import numpy as np

from midcourse.nn import CnnSpec, LstmSpec, init_params, loss_and_grads
from midcourse.nn.models import batch_loss
from midcourse.numeric import RngStream


def numeric_grads(spec, params, x, y, step):
    out = {}
    for name, value in params.items():
        g = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            old = value[idx]
            value[idx] = old + step
            up = batch_loss(spec, params, x, y)
            value[idx] = old - step
            down = batch_loss(spec, params, x, y)
            value[idx] = old
            g[idx] = (up - down) / (2 * step)
        out[name] = g
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--step", type=float, default=1e-5)
    ap.add_argument("--features", type=int, default=8)
    args = ap.parse_args()

    for spec in (CnnSpec(conv_filters=4, kernel_size=3), LstmSpec(hidden_units=8)):
        rng = RngStream(args.seed)
        params = init_params(spec, args.features, rng)
        params = {k: v + 0.1 * rng.normal(v.size).reshape(v.shape) for k, v in params.items()}
        x = rng.normal(6 * args.features).reshape(6, args.features)
        y = np.arange(6) % 3
        _, analytic = loss_and_grads(spec, params, x, y)
        numeric = numeric_grads(spec, params, x, y, args.step)
        print(spec.kind)
        for name in analytic:
            a, n = analytic[name], numeric[name]
            print(f"  {name:<8} max |diff| {np.abs(a - n).max():.2e}   "
                  f"max |g| {np.abs(a).max():.2e}")


if __name__ == "__main__":
    main()
