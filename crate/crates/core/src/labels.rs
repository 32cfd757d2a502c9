//! Index-name conventions shared by the chain types.
//!
//! Sites are 0-based internally. Bond `b{i}` sits to the left of site `i`,
//! so a length-`n` chain uses bonds `b0..=b{n}` with the boundaries at
//! extent 1. The conjugated (bra) layer uses the `c` prefix so that bra and
//! ket indices never collide inside one contraction.

pub fn bond(i: usize) -> String {
    format!("b{i}")
}

pub fn phys(i: usize) -> String {
    format!("p{i}")
}

pub fn bra_bond(i: usize) -> String {
    format!("cb{i}")
}

pub fn mpo_bond(i: usize) -> String {
    format!("w{i}")
}

pub fn mpo_out(i: usize) -> String {
    format!("po{i}")
}

pub fn mpo_in(i: usize) -> String {
    format!("pi{i}")
}
