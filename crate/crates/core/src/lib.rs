//! Numerical kernels for convex-body geometry built on support functions.
//!
//! The crate evaluates boundary Riesz-type potentials and dual
//! quermassintegrals of convex bodies, chord integrals by several
//! independent routes, and runs a nonlocal Gauss curvature flow whose
//! stationary points solve a Monge-Ampère-type equation on the sphere.
//!
//! Bodies are represented by samples of their support function on a fixed
//! spherical quadrature grid ([`SphereGrid`]). On the circle the samples
//! are differentiated spectrally, which gives boundary points, curvature
//! and radial data with no extra discretization error for band-limited
//! inputs; on `S²` the grid carries quadrature only and 3-D bodies are
//! built from the canonical closed-form families.
//!
//! Everything downstream is deterministic: integration uses a fixed
//! pairwise summation tree, Monte Carlo oracles use a counter-based
//! generator keyed by `(seed, shard, index)`, and parallel sweeps collect
//! into node order before reducing.

pub mod body;
pub mod chord;
pub mod error;
pub mod flow;
pub mod oracle;
pub mod quad;
pub mod riesz;
pub mod sphere;

pub use body::{BodyKind, ConvexBody, SupportField, ValidationReport};
pub use chord::{ChordParams, ChordResult, ChordRoute};
pub use error::{Error, Result};
pub use flow::{DtPolicy, FlowConfig, FlowOutcome, FlowStatus, FlowTrace, TraceRow};
pub use oracle::{CounterRng, McEstimate};
pub use riesz::{HolderEstimate, HolderFlag, PotentialSpec};
pub use sphere::{Field, SphereGrid, Vec3};
