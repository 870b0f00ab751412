"""Anomaly detection and explanation for UAV flight-controller logs.

Subpackages and modules:

* ``logdata`` / ``logparser`` — dataflash log model, text format, annotations
* ``features`` — feature channels, normalization, windowed datasets
* ``neural`` — LSTM autoencoder engine (compiled core + NumPy fallback)
* ``detect`` — autoencoder and rule-based detectors
* ``evaluation`` — precision/recall/F1, ROC, AUC
* ``synth`` — deterministic synthetic logs and anomaly injection
* ``explain`` — requirement templates and report rendering
* ``cli`` — the ``uavad`` command
"""

__version__ = "0.1.0"
