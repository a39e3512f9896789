#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Malformed fixtures and the 1-based line each must be rejected at.
pub const MALFORMED: [(&str, usize); 6] = [
    ("bad_label.libsvm", 3),
    ("zero_index.libsvm", 2),
    ("repeated_index.libsvm", 4),
    ("missing_colon.libsvm", 2),
    ("bad_value.libsvm", 3),
    ("nan_value.libsvm", 5),
];

pub const VALID: [&str; 3] = ["dense.libsvm", "sparse.libsvm", "wide_last_column.libsvm"];
