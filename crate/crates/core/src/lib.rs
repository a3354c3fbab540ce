pub mod checks;
pub mod diagnostics;
pub mod error;
pub mod initial;
pub mod integrator;
pub mod io;
pub mod oseen_frank;
pub mod regularized;
pub mod runner;
pub mod spectral;
pub mod stresses;
pub mod tensor;
