//! Exact consistency testing of reported binary-classification scores.
//!
//! Given scores reported with finite precision, decides whether some integer
//! confusion matrix (or some collection of per-fold matrices combined by mean
//! of scores or score of means) reproduces all of them, and produces a
//! witness when one does.

pub mod decimal;
pub mod folds;
pub mod interval;
pub mod lp;
pub mod mos;
pub mod scores;
pub mod single;
