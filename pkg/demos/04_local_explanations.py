"""
Explaining one prediction
=========================

Two complementary local views for a single apartment:

* ceteris-paribus profiles -- slide one variable while the rest of the
  observation stays frozen; the quantile-normalized variant puts every
  numeric variable on a shared [0, 1] axis;
* break-down attribution -- greedily pin variables to the observation's
  values and attribute the mean-prediction shift of each step, telescoping
  exactly from the population average to this prediction.
"""

from boxplain import (
    Observation,
    break_down,
    ceteris_paribus,
    explain,
    fit_linear,
    fit_tree,
    normalize_cp,
    render,
    shapley_oracle,
)

from _synthetic import apartments, out_dir

data = apartments()
features, price = data.drop_target(), data.target_vector()
lm = explain(fit_linear(features, price).predict, features, price, "linear")
rf = explain(fit_tree(features, price, 6, 8).predict, features, price, "tree")

obs = Observation.from_row(features, 17)
print("observation:", obs.values)

profiles = [ceteris_paribus(e, obs) for e in (lm, rf)]
(out_dir() / "cp.svg").write_text(render(profiles, title="ceteris paribus").text)

normalized = [
    normalize_cp(ceteris_paribus(e, obs, variables=["surface", "year"]), e)
    for e in (lm, rf)
]
(out_dir() / "cp_normalized.svg").write_text(
    render(normalized, title="ceteris paribus, quantile-normalized x").text
)

attributions = [break_down(e, obs) for e in (lm, rf)]
for att in attributions:
    print(f"{att.label}: baseline {att.baseline:9.2f} "
          f"-> prediction {att.final_prediction:9.2f}")
    for step in att.steps:
        print(f"    {step.variable:>9} = {step.value!s:<8} "
              f"{step.contribution:+9.2f}")

# Against exact Shapley values (tiny feature count, so enumeration is fine):
phi = shapley_oracle(rf, obs)
print("tree Shapley values:", {k: round(v, 2) for k, v in phi.items()})

(out_dir() / "breakdown.svg").write_text(
    render(attributions, title="break-down attribution").text
)
print("wrote demos/out/cp.svg, cp_normalized.svg, breakdown.svg")
