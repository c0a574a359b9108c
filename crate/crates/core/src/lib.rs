pub mod real;
pub mod profiles;
pub mod series;
pub mod spectrum;
pub mod evolution;
pub mod threshold;
