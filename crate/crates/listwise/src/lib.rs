//! Filter-list tooling on top of `listwise-core`: file formats, the
//! command line, reports, content-blocker JSON, a thread-safe strategy
//! wrapper, and seeded workload generators.

pub mod bench;
pub mod cli;
pub mod formats;
pub mod ios_json;
pub mod report;
pub mod shared;
pub mod synth;
