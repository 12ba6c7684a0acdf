pub mod model;
pub mod patterns;
pub mod runtime;
pub mod syntax;
