"""Physical constants and shared defaults."""

C_M_PER_S = 299_792_458.0

# Transmit power of the virtual sounder; all synthesized amplitudes are
# relative to this reference (|H| = 1 <=> 0 dB).
TX_POWER_DBM = 10.0

# Knife-edge loss is zero below this Fresnel parameter.
KNIFE_EDGE_NU_MIN = -0.78
