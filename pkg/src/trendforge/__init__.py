"""trendforge: turn raw time-series corpora into trend-description instruction datasets.

The pipeline samples windows from a corpus, extracts each window's trend
(seasonal-trend decomposition when a seasonality is detected, Gaussian-process
posterior mean otherwise), compresses the trend into a short rounded summary,
writes a natural-language description of it, and emits instruction-tuning
samples together with rendered line plots.  A small HTTP service runs the
blind human-scoring protocol used to grade competing describers.
"""

__version__ = "0.1.0"
