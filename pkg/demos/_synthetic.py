"""Shared synthetic apartment-price table used by the demo scripts.

Price is linear in surface, strongly nonlinear in construction year
(a parabola bottoming out around 1970), shifted per district, plus noise.
A linear model can only average the year effect away; a tree picks it up.
The tiny "old_town" district (4 rows, huge premium) is deliberately smaller
than a sane tree's min_leaf, so the tree misses it while the linear model's
per-district offsets absorb it: that is what fattens the tree's residual
tail relative to the linear model.
"""

import numpy as np

from boxplain import ColumnKind, TabularDataset

DISTRICT_OFFSETS = {
    "center": 150.0,
    "north": 0.0,
    "south": -30.0,
    "east": 20.0,
    "west": -10.0,
    "old_town": 400.0,
}


def apartments(n=500, seed=11):
    rng = np.random.default_rng(seed)
    surface = np.round(rng.uniform(25.0, 130.0, n), 1)
    year = rng.integers(1930, 2011, n).astype(np.float64)
    main = [d for d in DISTRICT_OFFSETS if d != "old_town"]
    district = [str(v) for v in rng.choice(main, n)]
    for i in rng.choice(n, 4, replace=False):
        district[i] = "old_town"
    price = (
        3.0 * surface
        + 0.08 * (year - 1970.0) ** 2
        + np.array([DISTRICT_OFFSETS[d] for d in district])
        + rng.normal(0.0, 10.0, n)
    )
    return TabularDataset.from_columns(
        [
            ("surface", ColumnKind.NUMERIC, surface),
            ("year", ColumnKind.NUMERIC, year),
            ("district", ColumnKind.CATEGORICAL, district),
            ("price", ColumnKind.NUMERIC, np.round(price, 2)),
        ],
        target="price",
    )


def out_dir():
    from pathlib import Path

    path = Path(__file__).parent / "out"
    path.mkdir(exist_ok=True)
    return path
