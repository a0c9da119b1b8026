//! Radial reduction of `ℝ^N` integrals and piecewise-linear assembly on
//! graded meshes of `(0, R]`.

pub mod forms;
pub mod grid;
pub mod quadrature;

pub use forms::{
    assemble_with_density, integrate_field, integrate_radial, project, radial_density, sphere_area, BoundaryCondition,
    DiscreteForms,
};
pub use grid::{build_grid, Grading, Ladder, RadialGrid, DEFAULT_QUAD_ORDER};
