"""Deterministic rowhammer attack life-cycle and countermeasure simulator."""
