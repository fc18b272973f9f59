"""Gaze-augmented BiLSTM-CRF named-entity tagging at desk scale."""

__version__ = "0.1.0"
