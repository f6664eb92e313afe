import numpy as np
import pytest

from boxplain.data import ColumnKind, TabularDataset


def make_dataset(cols, target=None):
    """Build a dataset from {'name': values} with kinds inferred per column."""
    built = []
    for name, values in cols.items():
        if all(isinstance(v, str) for v in values):
            built.append((name, ColumnKind.CATEGORICAL, values))
        else:
            built.append((name, ColumnKind.NUMERIC, values))
    return TabularDataset.from_columns(built, target=target)


def random_dataset(rng, n, numeric=2, categorical=0, levels=("a", "b", "c")):
    cols = {}
    for i in range(numeric):
        cols[f"x{i + 1}"] = rng.normal(0.0, 3.0, n)
    for i in range(categorical):
        cols[f"d{i + 1}"] = [str(v) for v in rng.choice(levels, n)]
    return make_dataset(cols)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def apartments_like(n=500, seed=11):
    """Synthetic analog of an apartment-price table: linear surface effect,
    strongly nonlinear construction-year effect, district offsets, and a tiny
    expensive district a size-limited tree cannot isolate."""
    rng = np.random.default_rng(seed)
    surface = np.round(rng.uniform(25.0, 130.0, n), 1)
    year = rng.integers(1930, 2011, n).astype(np.float64)
    main = ["center", "north", "south", "east", "west"]
    district = [str(v) for v in rng.choice(main, n)]
    rare = rng.choice(n, 4, replace=False)
    for i in rare:
        district[i] = "old_town"
    offsets = {"center": 150.0, "north": 0.0, "south": -30.0,
               "east": 20.0, "west": -10.0, "old_town": 400.0}
    year_effect = 0.08 * (year - 1970.0) ** 2
    price = (
        3.0 * surface
        + year_effect
        + np.array([offsets[d] for d in district])
        + rng.normal(0.0, 10.0, n)
    )
    return make_dataset(
        {"surface": surface, "year": year, "district": district,
         "price": np.round(price, 2)},
        target="price",
    )


def dataset_to_csv_text(data):
    from boxplain.data import write_csv

    return write_csv(data)
