//! Holds the cross-crate acceptance suite in `tests/acceptance.rs`.
