# Numerical components and experiment runners
