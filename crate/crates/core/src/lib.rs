pub mod certify;
pub mod cli;
pub mod data;
pub mod error;
pub mod linalg;
pub mod model;
pub mod path;
pub mod report;
pub mod solve;
pub mod validate;
