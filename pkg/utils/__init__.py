# Utilities package for SRG Bode
