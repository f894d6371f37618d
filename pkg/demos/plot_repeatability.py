"""
Day-to-day repeatability of one joint's entropy
===============================================

"""

# three days, four subjects, three normal-walking trials per day
import tempfile
import warnings

from gaitse.entropy import se_profile
from gaitse.recording import JointId
from gaitse.stats import balanced_cube, gauge_rr, two_way_anova
from gaitse.synth import generate_corpus

_, results = generate_corpus(tempfile.mkdtemp(), n_subjects=4, conditions=("NW",), trials_per=3, days=3,
                             seed=2, duration_s=5.0)
records = []
for trial, _ in results:
    md = trial.metadata
    value = se_profile(trial, [JointId.SpineBase], "Y").value("SpineBase:Y")
    records.append((md.day, md.subject_id, value))

cube, days, subjects = balanced_cube(records)
print("design (days, subjects, trials):", cube.shape)

# the interaction term is kept only when it is significant
table = two_way_anova(cube, include_interaction="auto")
print(table.to_csv())

# variance components; a negative estimate is set to zero with a warning
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    vc = gauge_rr(table, len(days), len(subjects), cube.shape[2])
for w in caught:
    print("note:", w.message)
print(vc.to_csv())
