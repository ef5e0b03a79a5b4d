# Tests package for SRG Bode
