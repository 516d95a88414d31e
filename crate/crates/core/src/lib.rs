pub mod analysis;
pub mod contract;
pub mod evaluation;
pub mod gateway;
pub mod model;
pub mod session;
pub mod synthesis;
