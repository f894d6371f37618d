"""
From raw recordings to a walking-condition classifier
=====================================================

"""

# write a corpus of 10 subjects x 5 conditions x 3 trials
import sys
import tempfile
from pathlib import Path

from gaitse.classify import build_feature_table, cross_validate, drop_category_and_reevaluate, rank_attributes
from gaitse.entropy import se_profile
from gaitse.preprocess import trim_boundary_artifacts
from gaitse.recording import CORE15, load_manifest
from gaitse.synth import generate_corpus
from gaitse.viz import PlotSpec, accuracy_bar_svg

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out_dir.mkdir(exist_ok=True)
manifest, _ = generate_corpus(tempfile.mkdtemp(), n_subjects=10, trials_per=3, seed=0)
trials = load_manifest(manifest)
print(len(trials), "trials")

# trim tracking jumps at both ends, then one SE per Core15 joint on the vertical axis
profiles = [se_profile(trim_boundary_artifacts(t)[0], CORE15, "Y") for t in trials]

# normal walking against everything else, 10-fold stratified CV
table = build_feature_table(profiles, "Binary")
accuracies = {}
for model in ("knn", "logit", "rf", "svm"):
    report = cross_validate(table, model, folds=10, seed=0)
    accuracies[model] = float(report.accuracy)
    print(report.model_descriptor, f"{accuracies[model]:.3f}")
print(report.confusion.to_csv())

# rank joints by |r| with the label and drop the weakest category
ranking = rank_attributes(table)
print(ranking.to_csv())
for model, r in drop_category_and_reevaluate(table, ranking, models=("knn", "rf")).items():
    print(f"{model}: without {r.dropped} accuracy changes by {100 * r.accuracy_delta:+.1f} pp")

(out_dir / "accuracy.svg").write_bytes(accuracy_bar_svg(accuracies, PlotSpec("BarChart", y_label="Accuracy (%)")))
