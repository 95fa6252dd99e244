//! Measurable versions of the energy identity, the a-priori bounds, the
//! Poincaré–trace inequality and the nondimensional scaling, plus the
//! convergence and stability experiment drivers.

pub mod apriori;
pub mod delta_limit;
pub mod energy;
pub mod mms;
pub mod poincare;
pub mod stability;
pub mod units;

pub use apriori::{apriori_monitor, AprioriReport};
pub use delta_limit::{delta_limit, DeltaLimitReport};
pub use energy::{energy, EnergyReport};
pub use mms::{mms_convergence, MmsCase, MmsReport};
pub use poincare::{poincare_trace_ratio, ComponentRatio};
pub use stability::{stability_experiment, StabilityReport};
pub use units::{nondimensionalize, NondimReport, PhysicalUnits};
