"""Learning to predict robustness from a labeled corpus.

Labels a few hundred small instances with the true (expensive) stress
tests, trains the from-scratch multilayer perceptron on the nine key
features, and checks how well it predicts the robustness of timetables
it has never seen. Finishes with the per-feature importance ranking.

This is a scaled-down version of the full pipeline; expect a few minutes.
Artifacts land in demos/out/surrogate/.

Run from the repository root:  python3 demos/02_train_surrogate.py
"""

from pathlib import Path

import numpy as np

from transit_robust.features import FeatureLayout
from transit_robust.generate import (GridSpec, default_variants, gen_corpus,
                                     gen_grid)
from transit_robust.robustness import RobustnessConfig
from transit_robust.storage import load_matrix
from transit_robust.surrogate import (TrainConfig, evaluate,
                                      feature_importance, save_model, train)

OUT = Path(__file__).resolve().parent / "out" / "surrogate"


def main():
    dataset = gen_grid(GridSpec(rows=3, cols=4, n_groups=30,
                                total_passengers=150, seed=1))
    if not (OUT / "labels.csv").is_file():
        print("labeling corpus (first run only)...")
        gen_corpus(dataset, default_variants(12), 25, OUT, horizon=2,
                   robustness=RobustnessConfig(rt4_replications=3))
    _, x = load_matrix(OUT / "features.csv")
    _, y = load_matrix(OUT / "labels.csv")
    layout = FeatureLayout.from_json((OUT / "layout.json").read_text())
    print(f"corpus: {len(x)} instances, {x.shape[1]} feature columns")

    rng = np.random.default_rng(0)
    perm = rng.permutation(len(x))
    cut = int(0.9 * len(x))
    cfg = TrainConfig(depth=3, width=64)
    model, history = train(x[perm[:cut]], y[perm[:cut]], cfg, layout)
    print(f"trained {len(history.epoch)} epochs, "
          f"final train loss {history.train_loss[-1]:.3f}")

    report = evaluate(model, x[perm[cut:]], y[perm[cut:]])
    print(f"\nheld-out error ({len(perm) - cut} instances, "
          "normalized 0-100 scale):")
    print(f"  mean absolute error: {report.mean_mae:.2f}")
    print(f"  within 5 units: {100 * report.within_5:.0f}%")

    print("\nfeature importance (first-layer weight mass):")
    for f, v in sorted(feature_importance(model, layout).items(),
                       key=lambda kv: -kv[1]):
        print(f"  F{f}: {v:.4f}")

    save_model(model, OUT / "model.json")
    print(f"\nmodel written to {OUT / 'model.json'}")


if __name__ == "__main__":
    main()
