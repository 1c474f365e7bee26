#![allow(dead_code)]

pub mod fig1;
pub mod greedy;
pub mod hdbscan_ref;
pub mod instances;
pub mod iraq;
pub mod lengths;
pub mod stores;
