//! Translations out of temporally accessible iteration: into partial fixed
//! points, and for monotone bodies into least fixed points over auxiliary
//! stage-comparison relations.

mod lfp;
mod pfp;

pub use lfp::{
    augment_structure, eval_with_aux, translate_monotone_to_lfp, AuxEntry, AuxSignature,
};
pub use pfp::translate_to_pfp;

use crate::formula::Formula;

/// True if no temporal connective and no iteration node occurs anywhere.
pub fn is_temporal_free(f: &Formula) -> bool {
    !f.has_iter() && !f.has_temporal_anywhere()
}
