"""Regenerate the bundled synthetic (Hs, Tp) record sets.

Run from the repository root:

    python3 data/make_records.py

The files are committed; this script only exists so the data provenance
is reproducible. Alpha is a single broad sea state, bravo mixes a swell
mode with a wind-sea mode (bimodal on purpose, it exercises the KDE).
"""

import csv
import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))


def _mode(rng, n, hs_mean, hs_sd, tp_mean, tp_sd, rho):
    cov = np.array(
        [
            [hs_sd**2, rho * hs_sd * tp_sd],
            [rho * hs_sd * tp_sd, tp_sd**2],
        ]
    )
    return rng.multivariate_normal([hs_mean, tp_mean], cov, size=n)


def _clip_to(records, bounds):
    (hs_lo, hs_hi), (tp_lo, tp_hi) = bounds
    keep = (
        (records[:, 0] >= hs_lo)
        & (records[:, 0] <= hs_hi)
        & (records[:, 1] >= tp_lo)
        & (records[:, 1] <= tp_hi)
    )
    return records[keep]


def _write(name, records):
    path = os.path.join(HERE, name)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["hs_m", "tp_s"])
        for hs, tp in records:
            writer.writerow([f"{hs:.4f}", f"{tp:.4f}"])
    print(f"{name}: {records.shape[0]} records")


def main():
    rng = np.random.default_rng(20240811)

    alpha = _mode(rng, 2400, hs_mean=2.2, hs_sd=0.8, tp_mean=7.5, tp_sd=1.6, rho=0.45)
    alpha = _clip_to(alpha, ((0.3, 6.0), (3.5, 13.0)))[:2000]
    _write("site_alpha.csv", alpha)

    swell = _mode(rng, 1300, hs_mean=1.6, hs_sd=0.45, tp_mean=10.8, tp_sd=1.0, rho=0.1)
    windsea = _mode(rng, 1300, hs_mean=3.1, hs_sd=0.7, tp_mean=6.2, tp_sd=0.9, rho=0.5)
    bravo = _clip_to(np.vstack([swell, windsea]), ((0.3, 6.0), (3.5, 13.0)))[:2400]
    _write("site_bravo.csv", bravo)


if __name__ == "__main__":
    main()
