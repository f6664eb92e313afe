"""
Wrapping models and comparing their residual distributions
===========================================================

Any model reduces to a single contract here: a function from a query table
to a vector of scores. We fit the two built-in reference models, wrap each
with `explain`, and overlay their residual diagnostics in one chart:
the survival curve of absolute residuals next to Tukey boxplots with a red
RMSE marker per model.
"""

from boxplain import (
    explain,
    export_json_many,
    fit_linear,
    fit_tree,
    model_performance,
    render,
    survival_at,
)

from _synthetic import apartments, out_dir

data = apartments()
features, price = data.drop_target(), data.target_vector()

linear = fit_linear(features, price)
tree = fit_tree(features, price, max_depth=6, min_leaf=8)

lm = explain(linear.predict, features, price, "linear")
rf = explain(tree.predict, features, price, "tree")

perf_lm = model_performance(lm)
perf_tree = model_performance(rf)
print(f"linear RMSE: {perf_lm.rmse:8.2f}")
print(f"tree RMSE:   {perf_tree.rmse:8.2f}")

# The tree is better in the bulk but owns the heaviest residual tail: the
# fraction of its |residuals| beyond the linear model's largest one is
largest_lm = float(perf_lm.abs_sorted[-1])
print(f"tree residuals beyond the largest linear residual: "
      f"{survival_at(perf_tree.recdf, largest_lm):.1%}")

chart = render([perf_lm, perf_tree], title="absolute residuals")
(out_dir() / "performance.svg").write_text(chart.text)
(out_dir() / "performance.json").write_text(export_json_many([perf_lm, perf_tree]))
print("wrote demos/out/performance.svg and .json")
