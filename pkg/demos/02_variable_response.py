"""
How does the response depend on one variable?
=============================================

Three global views of a single variable's effect:

* partial dependence -- average prediction with the variable pinned to each
  grid value across all validation rows;
* accumulated local effects -- within-bin prediction differences, summed and
  centered, which stay honest under correlated inputs;
* a merging path for categorical variables -- levels with similar mean
  response fuse first, cheap merges reveal groups.
"""

from boxplain import (
    GridStrategy,
    accumulated_local_effects,
    explain,
    factor_merge,
    fit_linear,
    fit_tree,
    partial_dependence,
    render,
)

from _synthetic import apartments, out_dir

data = apartments()
features, price = data.drop_target(), data.target_vector()
lm = explain(fit_linear(features, price).predict, features, price, "linear")
rf = explain(fit_tree(features, price, 6, 8).predict, features, price, "tree")

# Year is where the models disagree: the tree finds the parabola, the
# linear model fits a nearly flat line through it.
pdp = [partial_dependence(e, "year", GridStrategy.quantile(21)) for e in (lm, rf)]
(out_dir() / "pdp_year.svg").write_text(render(pdp, title="year effect (PDP)").text)

for curve in pdp:
    lo = min(g for _, g in curve.points)
    hi = max(g for _, g in curve.points)
    print(f"{curve.label:>7} PDP range over year: {hi - lo:7.1f}")

ale = [accumulated_local_effects(e, "year", k=20) for e in (lm, rf)]
(out_dir() / "ale_year.svg").write_text(render(ale, title="year effect (ALE)").text)

# District is categorical: merge levels by similarity of mean response.
paths = [factor_merge(e, "district") for e in (lm, rf)]
for path in paths:
    groups = path.groups_at(3)
    print(f"{path.label:>7} district groups at cut 3: {groups}")
(out_dir() / "merge_district.svg").write_text(
    render(paths, title="district merging paths").text
)
print("wrote demos/out/pdp_year.svg, ale_year.svg, merge_district.svg")
