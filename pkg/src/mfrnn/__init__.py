"""Mean-field training dynamics of Elman RNNs."""
