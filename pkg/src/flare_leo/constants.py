"""Physical constants and radio-frame timing shared across modules."""

# Speed of light.
SPEED_OF_LIGHT_M_S = 299792458.0
SPEED_OF_LIGHT_KM_S = SPEED_OF_LIGHT_M_S / 1000.0

# Spherical earth model.
EARTH_RADIUS_KM = 6371.0

# LTE-style framing: one channel use lasts one symbol, a block is 300 symbols.
SYMBOL_DURATION_S = 66.7e-6
SYMBOLS_PER_SLOT = 300
SLOT_DURATION_S = SYMBOLS_PER_SLOT * SYMBOL_DURATION_S
