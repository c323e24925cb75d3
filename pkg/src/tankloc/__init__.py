"""Region-wise indoor localization from tank photos.

Pipeline: ingest a class-per-directory image corpus, train and compare
image classifiers under stratified cross-validation, analyze the results
(ANOVA, Scott-Knott, ROC, size/accuracy trade-off), and serve a map-region
decision from a single photo over HTTP.
"""

__version__ = "0.1.0"
