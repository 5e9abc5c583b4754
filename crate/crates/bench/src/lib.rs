// SPDX-License-Identifier: Apache-2.0
//! Benchmark-only crate; see `benches/`.
