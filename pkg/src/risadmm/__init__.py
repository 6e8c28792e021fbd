"""RIS-assisted two-user MISO beamforming via ADMM."""
