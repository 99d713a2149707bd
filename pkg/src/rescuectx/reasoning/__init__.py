"""Reasoning layer: detectors, propositional encoding, SAT and the verdict cascade."""
