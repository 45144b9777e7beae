//! Spectral normal-form decomposition of the periodic KdV equation
//! `u_t + u_xxx = (u^2)_x`.
//!
//! A solution in the gauged frame `v = <nabla>^{-s} u` is split as
//! `v = R[f] + h + w`: `R` is the closed-form resonant flow, `h = T(v, v)`
//! the bilinear normal form and `w` the remainder. The modules provide the
//! fields and norms ([`spectrum`]), the multipliers ([`operators`]), the
//! resonant flow ([`resonant`]), a time integrator with runtime diagnostics
//! ([`solver`]) and the decomposition itself ([`decompose`]).
//!
//! ```
//! use kdv_normal_form::decompose::compute_w;
//! use kdv_normal_form::operators::NormalFormConstants;
//! use kdv_normal_form::solver::{evolve, SolverConfig};
//! use kdv_normal_form::spectrum::{hs_norm, sample_rough, RoughDataSpec, SobolevIndex};
//!
//! let s = SobolevIndex::new(0.4);
//! let f = sample_rough(&RoughDataSpec { s, epsilon: 0.01, amplitude: 0.1, seed: 1, max_mode: 32 }).unwrap();
//! let mut config = SolverConfig::new(s, 32, 1e-4, 0.01);
//! config.save_every = 10;
//! let traj = evolve(&f, &config).unwrap();
//! let w = compute_w(&traj, NormalFormConstants::default()).unwrap();
//! // w starts at -T(f, f) and stays far smaller than v
//! assert!(hs_norm(w.last().unwrap(), s) < 0.1 * hs_norm(traj.final_state(), s));
//! ```

pub mod decompose;
pub mod error;
pub mod operators;
pub mod resonant;
pub mod solver;
pub mod spectrum;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/normal-form.md")]
    mod normal_form {}
    #[doc = include_str!("../../../book/src/resonances.md")]
    mod resonances {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/multipliers.md")]
    mod multipliers {}
    #[doc = include_str!("../../../book/src/lipschitz.md")]
    mod lipschitz {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
