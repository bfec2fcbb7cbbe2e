//! Numerical toolkit for boundary blow-up solutions of
//! `-u'' - (mu / delta^2) u + u^p / delta^s = 0` near the boundary of a slab or ball.

pub mod asymptotics;
pub mod barriers;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod integrator;
pub mod interp;
pub mod ode_engine;
pub mod radial_solver;
pub mod reproduce;
pub mod real;
pub mod regime;
pub mod tridiag;

pub use error::{Error, Result};
pub use real::Real;
pub use regime::{
    characteristic_roots, critical_mu, critical_p, existence_verdict, CharacteristicRoots,
    ExtendedReal, ProblemParams, RegimeReport, Verdict,
};

/// Single-precision instantiations of the main generic types.
pub type ProblemParamsF32 = ProblemParams<f32>;
pub type RegimeReportF32 = RegimeReport<f32>;
pub type BarrierSpecF32 = barriers::BarrierSpec<f32>;
pub type OdeProblemF32 = ode_engine::OdeProblem<f32>;
pub type TrajectoryF32 = ode_engine::Trajectory<f32>;
pub type GridF32 = grid::Grid<f32>;
pub type GridSolutionF32 = radial_solver::GridSolution<f32>;
pub type AsymptoticFitF32 = asymptotics::AsymptoticFit<f32>;
