//! Extended mixed models for longitudinal and time-to-event data.
//!
//! The crate estimates four model families by maximum likelihood:
//!
//! * linear mixed models with optional latent classes ([`Family::Hlme`]),
//! * univariate latent process mixed models with a parameterized link
//!   between the observed marker and a Gaussian latent process
//!   ([`Family::Lcmm`]),
//! * multivariate latent process mixed models where several markers share
//!   one latent process ([`Family::Multlcmm`]),
//! * joint latent class models combining a class-specific mixed model with
//!   class-specific proportional hazards for one or several competing causes
//!   ([`Family::Jointlcmm`]).
//!
//! Estimation uses a Marquardt-type Newton algorithm with finite-difference
//! derivatives and three simultaneous convergence criteria. Post-fit
//! computations (posterior classification, empirical Bayes estimates,
//! predictions, link-function bands, cumulative incidences and dynamic
//! predictions) live in [`postfit`].

pub mod basis;
pub mod data;
pub mod error;
pub mod fit;
pub mod hazards;
pub mod layout;
pub mod likelihood;
pub mod links;
pub mod model;
pub mod numerics;
pub mod optimizer;
pub mod postfit;
pub mod simulate;
pub mod spec;

pub use data::{LongDataset, ObservationRecord, SurvivalRecord};
pub use error::{Error, Result};
pub use fit::{fit_model, FitOptions, FittedModel, InitStrategy};
pub use layout::{ModelParams, ParameterLayout};
pub use model::{SubjectDesign, ValidatedModel};
pub use spec::{Family, ModelSpec};
