pub mod fit;
pub mod grid;
pub mod ode;
pub mod quad;

pub use fit::{least_squares, loglog_slope, polyfit, LinearFit};
pub use grid::{cumulative, derivatives, derivatives_with_parity, fd_weights, graded_grid, HermiteTable};
pub use ode::{Dopri5, OdeOptions};
pub use quad::{integrate, integrate_points, integrate_semi_infinite, principal_value, quad, QuadEstimate, Tolerance};
