# PD-MPC flood-control package
