"""Long-range Ising chains: Gibbs measures, FKG checks and Ruelle operator numerics."""
