//! Language embedding tables: imported from file or learned by a
//! multilingual character language model.

pub mod charlm;
mod table;

pub use charlm::{
    lm_grad_check, train_char_lm, CharLm, CharLmConfig, CharLmRun, Corpus, GradCheckConfig,
};
pub use table::LanguageEmbeddingTable;
