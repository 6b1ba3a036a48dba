//! Finite-volume spectral laboratory for the discrete random displacement
//! model.
//!
//! The crate builds lattice Schrödinger operators `h_0 + V` on integer boxes
//! with truncation, Neumann, Dirichlet or periodic boundary conditions,
//! computes their spectra, extracts Floquet bands of one-dimensional periodic
//! potentials, and estimates the integrated density of states of the
//! Bernoulli displacement model by Monte Carlo sampling. The [`verify`]
//! module bundles the numerical checks that the command-line tool and the
//! acceptance tests run.

// `!(a < b)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bdm;
pub mod error;
pub mod floquet;
pub mod ids;
pub mod io;
pub mod lattice;
pub mod model;
pub mod rng;
pub mod spectra;
pub mod verify;

pub use error::{Error, Result};
pub use floquet::{Band, BandEdges, BandStructure, SigmaMode, TransferMatrix};
pub use ids::{DosHistogram, FitResult, IdsCurve, IdsParams, Side, TestFunction};
pub use lattice::{BoundaryCondition, LatticeBox, LatticeOperator, SiteFunction};
pub use model::{Configuration, Distribution, EnergyMap, Geometry, SingleSite};
pub use spectra::{DenseSymmetric, GroundState, Spectrum, SymTridiagonal};
