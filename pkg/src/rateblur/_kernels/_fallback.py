"""Pure numpy kernels, contract-identical to the compiled extension."""

import numpy as np


def metric_reduce(z, mu, sigma, pi, kind, out):
    """Per-trial metric values from a block of standard normals.

    z has shape (trials, n); row j is transformed to deviations
    d = pi - (mu + sigma * z[j]) and reduced by metric kind:
    0 -> sqrt(mean(d^2)), 1 -> mean(|d|), 2 -> mean(d).
    Results are written into out (shape (trials,)).
    """
    d = pi - (mu + sigma * z)
    if kind == 0:
        np.sqrt(np.mean(d * d, axis=1), out=out)
    elif kind == 1:
        np.mean(np.abs(d), axis=1, out=out)
    elif kind == 2:
        np.mean(d, axis=1, out=out)
    else:
        raise ValueError(f"unknown metric kind {kind}")


def filtered_reduce(z, mu, sigma, pi, halfwidth, out):
    """Per-trial filtered RMSE: only deviations beyond the significance
    half-width enter, and each trial divides by its own significant-term
    count. Trials with no significant term produce 0.
    """
    d = pi - (mu + sigma * z)
    keep = np.abs(d) > halfwidth
    count = keep.sum(axis=1)
    ssq = np.sum(np.where(keep, d * d, 0.0), axis=1)
    nonzero = count > 0
    out[...] = 0.0
    out[nonzero] = np.sqrt(ssq[nonzero] / count[nonzero])
