//! Numerical geometric mechanics on finite-dimensional Lie groups.
//!
//! Everything is expressed in the right trivialization `TG = G x g`,
//! `T*G = G x g*`. Points of the trivialized Tulczyjew space, the reduced
//! space `z_d = O x g* x g`, and the Euler-Lagrange, Hamilton,
//! Euler-Poincare and Lie-Poisson vector fields are plain coordinate tuples
//! built on a structure-constant Lie algebra.
//!
//! ```
//! use gmtk_core::{AlgVec, DualVec, StructureAlgebra};
//!
//! let so3 = StructureAlgebra::so3();
//! let e1 = AlgVec::basis(3, 0);
//! let e2 = AlgVec::basis(3, 1);
//! assert_eq!(so3.bracket(&e1, &e2).unwrap(), AlgVec::basis(3, 2));
//! let nu = so3.ad_star(&e1, &DualVec::basis(3, 1)).unwrap();
//! assert_eq!(nu.as_slice(), &[0.0, 0.0, -1.0]);
//! ```

pub mod algebra;
pub mod dynamics;
pub mod error;
pub mod fd;
pub mod group;
pub mod integrate;
pub mod legendre;
mod linalg;
pub mod oracle;
pub mod reduction;
pub mod sample;
pub mod systems;
pub mod triplet;
pub mod verify;

pub use algebra::{pair, AlgVec, DualVec, Fiber, StructureAlgebra};
pub use dynamics::{HamiltonianField, LagrangianField, PhaseState, ScalarField};
pub use error::{Error, Result};
pub use fd::FdConfig;
pub use group::{GroupElement, GroupKind, GroupModel};
pub use integrate::{IntegratorSpec, Method, TrajectoryRecord};
pub use legendre::{GeneratedPoint, MorseFamily};
pub use reduction::{ReducedGenerator, ReducedPoint};
pub use systems::SystemSpec;
pub use triplet::{CotCotPoint, CotTanPoint, Generator, TripletPoint, TripletTangent};
