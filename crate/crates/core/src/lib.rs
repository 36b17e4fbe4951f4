pub mod encoding;
pub mod group;
pub mod hash;
pub mod hd;
pub mod lifted;
pub mod params;
pub mod ledger;
pub mod consensus;
pub mod fawkes;
pub mod lfc;
pub mod sim;
pub mod canary;
