pub mod network;
pub mod routing;
pub mod sim;
pub mod stations;
pub mod store;
pub mod rag;
pub mod eval;
pub mod service;
