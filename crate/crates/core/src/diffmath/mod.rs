//! Parameter-vector arithmetic and the differentiable-objective contract.

mod objective;
mod params;
mod quadratic;

pub use objective::{
    fd_grad, fd_hvp, grad_check, grad_check_with_step, hvp, hvp_check, loss_grad, loss_value,
    max_relative_error, project, relative_l2_error, Grouped, Masked, Objective,
};
pub use params::{axpy, dot, norm, sq_dist, ParamVector, Segment};
pub use quadratic::{QuadraticObjective, QuadraticTerm};
