"""Walking-pattern analysis from 25-joint skeleton recordings.

Modules: ``recording`` (formats and manifests), ``preprocess`` (artifact
trimming, walk segments), ``gait_params`` (tilt angles), ``entropy``
(Sample Entropy and profiles), ``stats`` (D statistics, ANOVA, gauge R&R),
``classify`` (feature tables, models, cross-validation, ranking),
``synth`` (synthetic corpora) and ``viz`` (SVG figures).
"""

__version__ = "0.1.0"
