"""Regenerates tests/fixtures/prices_12x2.csv: 12 assets in 3 latent clusters,
2015-2016 business days, wide price layout starting at 100."""
import datetime as dt
import sys

import numpy as np

rng = np.random.default_rng(20240601)
assets = [f"T{i:02d}" for i in range(12)]
days = [d for d in (dt.date(2015, 1, 1) + dt.timedelta(n) for n in range(731)) if d.weekday() < 5]
market = rng.normal(0, 0.008, len(days))
factors = rng.normal(0, 0.01, (3, len(days)))
noise = rng.normal(0, 0.004, (12, len(days)))
returns = market + factors[np.arange(12) % 3] + noise
returns[:, 0] = 0.0
prices = 100.0 * np.exp(np.cumsum(returns, axis=1))

out = open(sys.argv[1], "w") if len(sys.argv) > 1 else sys.stdout
out.write("date," + ",".join(assets) + "\n")
for t, d in enumerate(days):
    out.write(d.isoformat() + "," + ",".join(f"{p:.6f}" for p in prices[:, t]) + "\n")
