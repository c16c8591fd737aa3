//! Verification toolkit for the fundamental-group quotients produced by
//! 4-dimensional surgery: word arithmetic, integer linear algebra, a
//! certificate-producing commutation prover, manifold bookkeeping, bound
//! tables and a small surgery-script language.

pub mod bounds;
pub mod deduce;
pub mod mfd;
pub mod nil2;
pub mod script;
pub mod words;
pub mod zlinalg;

pub use deduce::{prove_abelian, Certificate, Limits, ProofReport};
pub use mfd::{BaseManifold, ManifoldState};
pub use nil2::{spanning_check, Tuple4};
pub use words::{FactorKind, GenId, Presentation, Relator, Word, WordError};
pub use bounds::{abelian_q_bounds, AbelianGroupSpec, BoundsReport};
pub use zlinalg::{AbelianInvariants, IntMatrix, Order};
