//! Workshop toolkit for teaching how machines read: mask an annotated
//! corpus into a mystery language, thread word cards into "bracelets" with a
//! bigram model, reduce and generate sentences with an attested grammar, and
//! print the physical materials.
//!
//! ```
//! use glossa_core::{bracelet, fixtures, BoundaryPolicy, Model};
//!
//! let model = Model::train(&fixtures::f1()).unwrap();
//! let verdict = bracelet::validate_sequence(
//!     &model,
//!     &["il", "mio", "cane", "è", "nel", "giardino"],
//!     BoundaryPolicy::EndRequired,
//! )
//! .unwrap();
//! assert!(verdict.valid);
//! ```

pub mod bracelet;
pub mod corpus;
pub mod fixtures;
pub mod grammar;
pub mod masking;
pub mod materials;
pub mod scalar;

use num_rational::Ratio;

pub use bracelet::{BigramModel, BoundaryPolicy, BraceletSentence, Deck};
pub use corpus::{AnnotatedCorpus, Tree};
pub use grammar::Grammar;
pub use masking::{MaskConfig, MaskMode, MaskingTable};
pub use scalar::Probability;

/// Bigram model reporting `f64` probabilities.
pub type Model = BigramModel<f64>;
/// Bigram model reporting exact reduced fractions.
pub type ExactModel = BigramModel<Ratio<u64>>;
/// Bracelet verdict with `f64` probabilities.
pub type Verdict = BraceletSentence<f64>;
/// Bracelet verdict with exact probabilities.
pub type ExactVerdict = BraceletSentence<Ratio<u64>>;
