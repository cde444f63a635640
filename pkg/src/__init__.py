"""Online alpha-fair resource allocation: policy, geometry, benchmarks and harness."""
