"""Event-by-event simulation of single-photon interference.

Messengers carrying a phase clock travel one at a time from a source to a
screen of adaptive detectors; the click statistics build up interference
patterns that are compared with wave-theory references.
"""

__version__ = "0.1.0"
