//! Criterion benchmarks for the hot kernels: click-conditioned similarity
//! maps, the distance transform, connected components, histogram
//! equalization and the DICE@Max sweep. Run with `cargo bench -p hsiseg-bench`.
