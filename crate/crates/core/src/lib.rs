pub mod bounds;
pub mod caratheodory;
pub mod classes;
pub mod cli;
pub mod search;
pub mod series;
