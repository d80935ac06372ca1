//! Matrix-valued Fourier series on `T^{d+ℓ}` with weighted-ℓ1 strip norms.
//!
//! Series are stored in FFT ordering, one coefficient block per matrix entry.
//! Nyquist modes survive the forward transform so that round trips are exact,
//! but every analytic operation projects onto the open band `|m_i| < N_i/2`.

mod dump;
mod fft;
mod field;
mod grid;
mod series;

pub use dump::{read_binary, read_text, write_binary, write_text};
pub use field::{invert_checked, GridField};
pub use grid::{l1, GridSpec};
pub use series::FourierSeries;

pub use num_complex::Complex64;
