//! Paillier keygen, encryption, the two homomorphic operations, and the
//! fixed-point codec that carries signed reals through the integer ring.

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use structural_consensus::paillier::{
    decrypt, encrypt, hom_add, hom_scale, keygen, FixedPointCodec,
};

fn main() {
    let (public, private) = keygen(128, 7).expect("key generation succeeds");
    println!("modulus n has {} bits", public.n().bits());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m1 = BigUint::from(41u32);
    let m2 = BigUint::from(58u32);
    let c1 = encrypt(&public, &m1, &mut rng).expect("in range");
    let c2 = encrypt(&public, &m2, &mut rng).expect("in range");

    // Ciphertext multiplication adds plaintexts; exponentiation scales.
    let sum = decrypt(&private, &public, &hom_add(&public, &c1, &c2)).expect("valid");
    let scaled =
        decrypt(&private, &public, &hom_scale(&public, &c1, &BigUint::from(3u32)))
            .expect("valid");
    println!("E(41) * E(58) decrypts to {sum}");
    println!("E(41)^3 decrypts to {scaled}");

    // Randomized encryption: the same plaintext never repeats on the wire.
    let again = encrypt(&public, &m1, &mut rng).expect("in range");
    println!("same plaintext, distinct ciphertexts: {}", c1.to_hex() != again.to_hex());

    // The codec maps signed reals to ring elements; scaled products carry
    // two fractional levels.
    let codec = FixedPointCodec::new(32, &public);
    println!("codec range |x| < {:.3e}, resolution {:.3e}", codec.max_abs(), codec.resolution());
    let x = -12.625f64;
    let m = codec.encode(x).expect("in range");
    let c = encrypt(&public, &m, &mut rng).expect("in range");
    let back = codec.decode(&decrypt(&private, &public, &c).expect("valid"), 1);
    println!("{x} round-trips to {back}");
}
