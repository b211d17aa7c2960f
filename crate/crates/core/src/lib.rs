//! Numerical toolkit for deciding whether linear dynamics preserve entropy
//! (single systems) or entanglement (bipartite systems), with constructive
//! reconstruction of the implementing operators and checkable witnesses
//! when preservation fails.

pub mod acceptance;
pub mod classifier;
pub mod dynamics;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod quantitative;
pub mod schmidt;
pub mod states;

pub use classifier::{classify, BipartiteMap, ClassifierConfig, QualitativeKind, QualitativeVerdict, Witness, WitnessKind};
pub use dynamics::{analyze, AnalyzeConfig, SingleSystemKind, SingleSystemVerdict, Superoperator};
pub use error::{Error, Result};
pub use generators::{Generator, Seed, RNG_ALGORITHM};
pub use linalg::{C64, ComplexMatrix, ComplexVector};
pub use quantitative::{check_e1, check_e2, Measure, QuantitativeVerdict};
pub use schmidt::BipartiteShape;
pub use states::{DensityMatrix, PureState};
