pub mod chart;
pub mod diagram;
pub mod eval;
pub mod gate;
pub mod gauge;
pub mod instruct;
pub mod keywords;
pub mod layout;
pub mod llm;
pub mod map;
pub mod pipeline;
pub mod puzzle;
pub mod record;
pub mod scene;
pub mod synth;
pub mod verify;
