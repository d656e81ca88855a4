//! Synthetic graphs with known answers, the exhaustive oracle, and the
//! bundled Alzheimer disease fixture.

pub mod fixture;
pub mod generator;
pub mod oracle;

pub use fixture::{ad_fixture, Fixture, FixtureManifest};
pub use generator::{generate, Generated, PlantSpec, PlantedTarget, TargetKind, Truth};
pub use oracle::{brute_force_oracle, hypergeom_sf_rational, OracleOutput};
