#!/usr/bin/env python3
"""Generate the bundled synthetic sample data under data/sample/.

The series are synthetic. The BTC close path follows a piecewise Brownian
bridge in log space through hand-picked anchor closes, and the first quarter
of 2021 is anchored at 28,200 (1 Jan) and 52,450 (31 Mar). A weak latent
signal (visible through btc.flow_ratio) shifts the next day's return.

Usage: make_sample_data.py [--out data/sample] [--seed 20210331]
"""

import argparse
import csv
import datetime as dt
import json
import os

import numpy as np

START = dt.date(2014, 1, 1)
END = dt.date(2021, 3, 31)
LATE_START = dt.date(2015, 8, 1)

ANCHORS = [
    ("2014-01-01", 770), ("2014-12-31", 320), ("2015-08-01", 280), ("2015-12-31", 430),
    ("2016-12-31", 960), ("2017-06-30", 2500), ("2017-12-17", 19100), ("2018-02-06", 6900),
    ("2018-12-15", 3200), ("2019-06-26", 12900), ("2019-12-31", 7200), ("2020-03-12", 4900),
    ("2020-08-01", 11800), ("2020-12-31", 28900),
    # First quarter of 2021.
    ("2021-01-01", 28200), ("2021-01-08", 40800), ("2021-01-11", 35500), ("2021-01-14", 39200),
    ("2021-01-22", 32900), ("2021-01-27", 30400), ("2021-02-08", 46200), ("2021-02-16", 49200),
    ("2021-02-21", 57500), ("2021-02-28", 45200), ("2021-03-13", 61200), ("2021-03-25", 51300),
    ("2021-03-31", 52450),
]

DAILY_VOL = 0.035
SIGNAL = 0.005


def days():
    n = (END - START).days + 1
    return [START + dt.timedelta(days=i) for i in range(n)]


def bridge_close(rng, dates, signal):
    """Log-price path through the anchors; each step carries SIGNAL * signal[t-1]."""
    index = {d: i for i, d in enumerate(dates)}
    logp = np.empty(len(dates))
    anchors = [(index[dt.date.fromisoformat(d)], np.log(v)) for d, v in ANCHORS]
    for (i0, a), (i1, b) in zip(anchors, anchors[1:]):
        steps = i1 - i0
        inc = SIGNAL * signal[i0:i1] + DAILY_VOL * rng.standard_normal(steps)
        inc += (b - a - inc.sum()) / steps  # constant drift correction keeps the signal
        logp[i0] = a
        logp[i0 + 1:i1 + 1] = a + np.cumsum(inc)
    return np.exp(logp)


def ar1(rng, n, phi, scale=1.0):
    x = np.empty(n)
    x[0] = rng.standard_normal()
    for t in range(1, n):
        x[t] = phi * x[t - 1] + np.sqrt(1 - phi * phi) * rng.standard_normal()
    return scale * x


def geometric_walk(rng, n, start, vol, drift=0.0002):
    return start * np.exp(np.cumsum(drift + vol * rng.standard_normal(n)))


def fmt(v):
    return "" if v is None else f"{v:.6f}".rstrip("0").rstrip(".")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "sample"))
    ap.add_argument("--seed", type=int, default=20210331)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    os.makedirs(args.out, exist_ok=True)

    dates = days()
    n = len(dates)
    signal = ar1(rng, n, 0.3)
    close = bridge_close(rng, dates, signal)
    t = np.arange(n)

    hashrate = 1e7 * np.exp(t / 420.0) * np.exp(0.04 * rng.standard_normal(n))
    difficulty = np.repeat(hashrate[::14], 14)[:n] * 0.14
    weekday = np.array([d.weekday() for d in dates])
    transactions = 2.2e5 * (1 + 0.5 * t / n) * (1 - 0.08 * (weekday >= 5)) * np.exp(0.05 * rng.standard_normal(n))
    active = 4e5 * (close / close[0]) ** 0.3 * np.exp(0.06 * rng.standard_normal(n))
    ret = np.concatenate([[0.0], np.diff(np.log(close))])
    fees = 0.2 * close * (0.0004 + 0.01 * np.abs(ret)) * np.exp(0.1 * rng.standard_normal(n))
    flow_ratio = signal + 0.3 * rng.standard_normal(n)
    netflow = ar1(rng, n, 0.9, 1500.0)

    internal = {
        "close": close, "hashrate": hashrate, "difficulty": difficulty, "transactions": transactions,
        "active_addresses": active, "fees": fees, "flow_ratio": flow_ratio, "netflow": netflow,
    }
    gappy = ["hashrate", "transactions", "active_addresses", "fees"]
    gaps = {c: set(rng.choice(np.arange(30, n - 30), size=n // 100, replace=False).tolist()) for c in gappy}
    rows = []
    for i, d in enumerate(dates):
        row = [d.isoformat()]
        for c, v in internal.items():
            if c == "netflow" and d < LATE_START:
                row.append("")
            elif c in gaps and i in gaps[c]:
                row.append("")
            else:
                row.append(fmt(v[i]))
        rows.append(row)
    write_csv(os.path.join(args.out, "btc.csv"), ["date", *internal], rows)

    markets = {
        "sp500": geometric_walk(rng, n, 1830, 0.01), "nasdaq": geometric_walk(rng, n, 4150, 0.012, 0.0003),
        "gold": geometric_walk(rng, n, 1200, 0.008, 0.0001), "oil": geometric_walk(rng, n, 98, 0.02, -0.0001),
        "dxy": geometric_walk(rng, n, 80, 0.004, 0.00005),
    }
    volumes = {
        "sp500_volume": 3.5e9 * np.exp(0.2 * rng.standard_normal(n)),
        "nasdaq_volume": 2.0e9 * np.exp(0.25 * rng.standard_normal(n)),
    }
    trading_days = [i for i, d in enumerate(dates) if d.weekday() < 5]
    write_csv(os.path.join(args.out, "markets.csv"), ["date", *markets],
              [[dates[i].isoformat(), *(fmt(v[i]) for v in markets.values())] for i in trading_days])
    write_csv(os.path.join(args.out, "volumes.csv"), ["date", *volumes],
              [[dates[i].isoformat(), *(fmt(round(v[i])) for v in volumes.values())] for i in trading_days])

    months = [i for i, d in enumerate(dates) if d.day == 1]
    cpi = 234.0 * np.exp(np.cumsum(0.0015 + 0.002 * rng.standard_normal(len(months))))
    rate = np.clip(np.cumsum(0.05 * rng.standard_normal(len(months))) + 1.0, 0.05, 2.5)
    unemp = np.clip(6.5 - 0.03 * np.arange(len(months)) + 0.2 * rng.standard_normal(len(months)), 3.4, 15)
    write_csv(os.path.join(args.out, "economic.csv"), ["date", "cpi", "fed_rate", "unemployment"],
              [[dates[i].isoformat(), fmt(cpi[k]), fmt(rate[k]), fmt(unemp[k])] for k, i in enumerate(months)])

    q1 = [i for i, d in enumerate(dates) if d >= dt.date(2021, 1, 1)]
    write_csv(os.path.join(args.out, "btc_q1_2021.csv"), ["date", "close"],
              [[dates[i].isoformat(), fmt(close[i])] for i in q1])

    manifest = {"sources": [
        {"id": "btc", "path": "btc.csv", "category": "internal", "columns": list(internal)},
        {"id": "markets", "path": "markets.csv", "category": "market_price", "columns": list(markets)},
        {"id": "volumes", "path": "volumes.csv", "category": "market_volume", "columns": list(volumes)},
        {"id": "economic", "path": "economic.csv", "category": "economic", "columns": ["cpi", "fed_rate", "unemployment"]},
    ]}
    with open(os.path.join(args.out, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
