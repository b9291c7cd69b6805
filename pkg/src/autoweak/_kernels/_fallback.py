"""Pure-numpy implementations of the hot kernels.

These mirror `_fast.pyx` operation-for-operation: identical tie-breaking,
identical accumulation order over labeling functions, so results agree with
the compiled path bit-for-bit (stump scan) or to float rounding (E-step).
"""

import numpy as np


def stump_scan(x, y, n_classes):
    """Best axis-aligned split of a single feature column.

    Scans midpoints of consecutive distinct sorted values and returns
    ``(correct, threshold, left_class, right_class)`` for the split
    ``x <= threshold -> left_class else right_class`` that maximizes the
    number of correctly classified points. Ties: lower threshold first,
    then lower class index per leaf. A constant column sends every point
    to the left leaf (threshold = the constant value).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]

    total = np.bincount(ys, minlength=n_classes).astype(np.int64)

    boundaries = np.nonzero(xs[1:] > xs[:-1])[0]
    if boundaries.size == 0:
        vote = int(np.argmax(total))
        return int(total[vote]), float(xs[0]), vote, vote

    onehot = np.zeros((n, n_classes), dtype=np.int64)
    onehot[np.arange(n), ys] = 1
    cum = np.cumsum(onehot, axis=0)

    left = cum[boundaries]
    right = total[None, :] - left
    left_best = left.max(axis=1)
    right_best = right.max(axis=1)
    correct = left_best + right_best

    j = int(np.argmax(correct))  # first max = lowest threshold
    i = int(boundaries[j])
    threshold = (xs[i] + xs[i + 1]) / 2.0
    left_class = int(np.argmax(left[j]))  # first max = lowest class index
    right_class = int(np.argmax(right[j]))
    return int(correct[j]), float(threshold), left_class, right_class


def ds_estep(votes, log_prior, log_conf):
    """Dawid-Skene E-step over non-abstaining votes.

    votes: (n, K) int64, -1 encodes abstain.
    log_prior: (C,) log class prior.
    log_conf: (K, C, C) log of per-LF row-stochastic confusion matrices.

    Returns (posterior (n, C), row_loglik (n,)) where row_loglik is the
    log marginal likelihood of the row's votes. Rows with no votes get the
    prior as posterior and log-likelihood 0.
    """
    votes = np.ascontiguousarray(votes, dtype=np.int64)
    n, k_lfs = votes.shape
    logp = np.tile(log_prior, (n, 1))
    for k in range(k_lfs):
        v = votes[:, k]
        m = v >= 0
        if m.any():
            logp[m] += log_conf[k][:, v[m]].T
    mx = logp.max(axis=1)
    z = np.exp(logp - mx[:, None])
    s = z.sum(axis=1)
    posterior = z / s[:, None]
    return posterior, mx + np.log(s)
