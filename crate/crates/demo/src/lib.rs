//! Browser demo exports. (under construction)
