"""Driven quantum-dot/cavity simulator.

Master-equation and quantum-trajectory propagation for a two-level emitter
strongly coupled to a single cavity mode, plus the measurement scenarios
built on top (transmission spectra, pulsed switching, photoluminescence).

Unit convention, used everywhere: rates and detunings are ordinary
frequencies in GHz, time is in ns. Factors of 2*pi enter only when
Hamiltonians and collapse operators are assembled.
"""

__version__ = "0.1.0"
