//! Planar biped simulation and reinforcement-learning toolkit comparing
//! joint-position and joint-torque action spaces.

pub mod dynamics;
pub mod robots;
pub mod env;
pub mod reward;
pub mod nets;
pub mod ppo;
pub mod pretrain;
pub mod harness;
