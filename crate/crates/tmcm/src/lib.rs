mod algebra;
pub mod basis;
pub mod cli;
pub mod error;
pub mod io;
pub mod mie;
pub mod modes;
pub mod rotation;
pub mod sph;
pub mod synthesis;
pub mod tmatrix;
pub mod translation;
