# Configuration package for the PD-MPC flood-control engine
