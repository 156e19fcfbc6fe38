//! Thin-wire method-of-moments simulator with characteristic-mode analysis
//! for multi-band quasi-isotropic antenna design.
//!
//! The crate covers the full design chain: parametric U/H-radiator
//! geometries ([`geometry`]), EFIE impedance operators and driven solves
//! ([`mom`]), characteristic-mode decomposition with tracking ([`cma`]),
//! far-field patterns and isotropy-deviation metrics ([`farfield`]),
//! series-capacitor feed matching ([`feednet`]), a derivative-free design
//! optimizer ([`designer`]), and an AWGN link/EVM emulation ([`linksim`]).

pub mod cma;
pub mod designer;
pub mod error;
pub mod farfield;
pub mod feednet;
pub mod geometry;
pub mod io;
pub mod linksim;
pub mod mom;

pub use error::{Error, Result};
