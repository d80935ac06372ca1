//! Hamiltonian systems, their time-`T` maps and the variational jets along tori.

mod flow;
mod geometry;
mod integrator;
mod system;

pub use flow::{
    directional_second_variation, flow_jet, flow_on_torus, second_variation_on_torus, FlowJet, JetOrder, TorusFlow};
pub use geometry::{check_geometry, standard_omega, Geometry, StandardGeometry};
pub use integrator::{integrate, IntegratorOptions, StepStats};
pub use system::{ForcingMode, Hamiltonian, PlainSaddle, RotatorSaddle};
