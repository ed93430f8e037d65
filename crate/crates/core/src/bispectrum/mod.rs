//! Frequency triplets, the phase operator `A`, and data bispectrum accumulation.

mod data;
mod index;
mod sidecar;

pub use data::{accumulate_bispectrum, BispectrumData};
pub(crate) use index::wrap;
pub use index::{build_index, build_phase_map, wrap_phase, BispectrumIndex, FreqCoord, PhaseIndexMap, Triplet};
pub use sidecar::{read_index, write_index};
