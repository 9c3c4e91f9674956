pub mod best_response;
pub mod colgen;
pub mod error;
pub mod game;
pub mod lp;
pub mod marginal;
pub mod mwu;
pub mod projection;
pub mod select;
pub mod io;
pub mod cli;
