//! Holds the `acceptance` test target; run it with
//! `cargo test -p nugget-gp-validation --test acceptance`.
