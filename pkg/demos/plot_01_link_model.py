"""
Link model and antenna pattern
==============================

Received power from an omni and a directional transmitter, and where the
directional lobe hits its floor.
"""

import math

import numpy as np

from pivotcharge import OMNI, AntennaPattern, PropagationParams, derive_tx_power, received_power

prop = PropagationParams()
pat = AntennaPattern()

# %%
# Power against distance. The 30 m offset keeps power finite at d = 0 and
# makes it fall off slowly over the first tens of meters.
for d in (0, 5, 10, 20, 50, 100):
    omni = received_power(prop, (0, 0), OMNI, OMNI, (d, 0))
    beam = received_power(prop, (0, 0), 0.0, pat, (d, 0))
    print(f"d={d:5.1f} m  omni {omni:.5f} W  boresight {beam:.5f} W")

# %%
# Gain against off-boresight angle.
for deg in (0, 11, 22, 44, 59.6, 90, 180):
    g = pat.gain_db(math.radians(deg))
    print(f"{deg:6.1f} deg  {g:6.2f} dB")

# %%
# Transmit power implied by a 2% charging efficiency.
print("tx power", derive_tx_power(prop, 0.02), "W")

# %%
# A narrower beam concentrates power near boresight.
narrow = AntennaPattern(hpbw_deg=22.0)
angles = np.radians([0, 5, 10, 15])
print([round(received_power(prop, (0, 0), 0.0, narrow, (10 * math.cos(a), 10 * math.sin(a))), 4)
       for a in angles])
