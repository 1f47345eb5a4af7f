"""Double-Bayesian SGD hyperparameters and a desk-scale optimizer laboratory."""
