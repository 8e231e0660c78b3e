//! Discrete simulation of independently scattered alpha-stable noise.
//!
//! Two generator families approximate a stable white noise: a lattice model
//! on R^d whose cell innovations are heavy-tailed i.i.d. variables, and a
//! Poisson (shot-noise) model on general measured spaces. On top of the
//! generators sit spatial linear filtering with white or fractional limits,
//! Levy motions on the sphere and on euclidean space, and a verification
//! layer that tests the weak limits via characteristic functions and
//! two-sample statistics.
//!
//! | Module        | Contents                                             |
//! |---------------|------------------------------------------------------|
//! | [`stable`]    | stable laws, exact sampler, tail-constant relations  |
//! | [`innovations`] | lattice-indexed i.i.d. generators                  |
//! | [`kernel`]    | integrands with support/decay certificates           |
//! | [`parser`]    | text grammar for kernels                             |
//! | [`gridops`]   | cell averaging and step-function operators           |
//! | [`filter`]    | lattice filters and their tail regimes               |
//! | [`gridnoise`] | the lattice noise, filtering, scaling, error bounds  |
//! | [`space`]     | measured spaces (boxes, spheres, hyperplane sets)    |
//! | [`shotnoise`] | Poisson and binomial random-measure approximations   |
//! | [`fractional`]| fractional limits, covariance kernel, renormalization|
//! | [`levy`]      | Levy motion on the sphere and Chentsov fields        |
//! | [`verify`]    | KS / characteristic-function test machinery          |

pub mod config;
pub mod error;
pub mod filter;
pub mod fractional;
pub mod gridnoise;
pub mod gridops;
pub mod innovations;
pub mod kernel;
pub mod levy;
pub mod parser;
pub mod quad;
pub mod report;
pub mod rng;
pub mod shotnoise;
pub mod space;
pub mod stable;
pub mod verify;

pub use error::{Error, Result};
pub use stable::{StableParams, TailSpec};
