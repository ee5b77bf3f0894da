pub mod error;
pub mod fock;
pub mod group;
pub mod observable;
pub mod operator;
pub mod povm;
pub mod quantization;
pub mod random;
pub mod summation;
pub mod tolerances;
pub mod verify;
