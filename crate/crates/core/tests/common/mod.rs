#![allow(dead_code)]
pub mod gradients;
pub mod service;
