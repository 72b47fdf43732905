# Event input handlers for the PD-MPC flood-control engine
