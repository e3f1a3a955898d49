pub mod exprcalc;
pub mod families;
pub mod forcing;
pub mod intlin;
pub mod ordcomb;
