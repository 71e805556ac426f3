//! Criterion benchmarks for assembly, stepping and netlist parsing; see `benches/`.
