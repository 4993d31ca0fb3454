//! Meshes, reference points, quadrature and the trajectory space `X_{h,p}`.

pub mod basis;
pub mod mesh;
pub mod points;
pub mod quadrature;
pub mod trajectory;

pub use basis::LagrangeBasis;
pub use mesh::{make_uniform_mesh, Mesh};
pub use points::{ref_points, Family, RefPointSet};
pub use quadrature::{composite_rule, gauss_legendre_rule, quadrature_rule, QuadPoint, QuadratureRule};
pub use trajectory::{interpolate, x_norm, Element, PointTable, Sample, Trajectory};
