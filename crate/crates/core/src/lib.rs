//! Euclidean multi-dimensional stable roommates.
//!
//! Agents are points in the plane and prefer coalitions with a smaller sum
//! of distances. The crate models instances and matchings, checks
//! stability, solves small instances exactly, builds the star gadgets and
//! implements the reduction from planar cubic exact cover by 3-sets.

pub mod chain;
pub mod checks;
pub mod gadgets;
pub mod io;
pub mod layout;
pub mod model;
pub mod reduction;
pub mod render;
pub mod report;
pub mod solvers;
pub mod stability;
pub mod x3c;

pub use model::{dist, Agent, Coalition, Instance, Matching, ModelError, Point, Pref};
pub use stability::{find_blocking, is_blocking, verify_stable, BlockingWitness, SearchMode, Verdict};
pub use solvers::{enumerate_stable, exists_stable, greedy_match_2, Enumeration, Existence};
