//! Paillier cryptosystem with additive homomorphism and a fixed-point codec
//! mapping signed reals into the plaintext ring.
//!
//! The scheme follows the textbook construction with `g = n + 1`, which
//! reduces encryption to `c = (1 + mn) · r^n mod n²`. Two homomorphic
//! operations carry the whole protocol: ciphertext multiplication adds
//! plaintexts, ciphertext exponentiation scales them. Real-valued states and
//! weights ride through as fixed-point integers; one homomorphic scaling
//! multiplies two fixed-point quantities, so decoded results carry one or
//! two scale levels and the codec range keeps two levels inside the signed
//! half-ring.
//!
//! This is a simulation artifact, not production cryptography: exponents are
//! not constant-time and no chosen-ciphertext hardening is attempted.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PaillierError {
    #[error("failed to generate a {bits}-bit prime after {attempts} attempts")]
    PrimeGenFailed { bits: u64, attempts: usize },
    #[error("plaintext is not in Z_n")]
    PlaintextOutOfRange,
    #[error("ciphertext is invalid under this key")]
    InvalidCiphertext,
    #[error("value {0} exceeds the codec's representable range {1}")]
    ValueOutOfRange(f64, f64),
    #[error("invalid key material: {0}")]
    BadKeyMaterial(String),
}

fn biguint_to_hex(v: &BigUint) -> String {
    v.to_str_radix(16)
}

fn biguint_from_hex(s: &str) -> Result<BigUint, String> {
    BigUint::parse_bytes(s.as_bytes(), 16).ok_or_else(|| format!("bad hex integer {s:?}"))
}

#[derive(Serialize, Deserialize)]
struct PublicKeyWire {
    n: String,
    g: String,
}

/// Public half of a Paillier keypair: `n = pq`, `g = n + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PublicKeyWire", into = "PublicKeyWire")]
pub struct PaillierPublicKey {
    n: BigUint,
    g: BigUint,
    n_squared: BigUint,
}

impl PaillierPublicKey {
    fn from_n(n: BigUint) -> Self {
        let g = &n + 1u32;
        let n_squared = &n * &n;
        PaillierPublicKey { n, g, n_squared }
    }

    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }
}

impl From<PaillierPublicKey> for PublicKeyWire {
    fn from(k: PaillierPublicKey) -> Self {
        PublicKeyWire { n: biguint_to_hex(&k.n), g: biguint_to_hex(&k.g) }
    }
}

impl TryFrom<PublicKeyWire> for PaillierPublicKey {
    type Error = String;

    fn try_from(w: PublicKeyWire) -> Result<Self, String> {
        let n = biguint_from_hex(&w.n)?;
        let g = biguint_from_hex(&w.g)?;
        if n < BigUint::from(4u32) {
            return Err("modulus too small".into());
        }
        if &g % &n != BigUint::one() {
            return Err("generator must be 1 mod n".into());
        }
        let n_squared = &n * &n;
        Ok(PaillierPublicKey { n, g, n_squared })
    }
}

#[derive(Serialize, Deserialize)]
struct PrivateKeyWire {
    lambda: String,
    mu: String,
}

/// Private half: `λ = lcm(p−1, q−1)` and `μ = L(g^λ mod n²)^{−1} mod n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PrivateKeyWire", into = "PrivateKeyWire")]
pub struct PaillierPrivateKey {
    lambda: BigUint,
    mu: BigUint,
}

impl From<PaillierPrivateKey> for PrivateKeyWire {
    fn from(k: PaillierPrivateKey) -> Self {
        PrivateKeyWire { lambda: biguint_to_hex(&k.lambda), mu: biguint_to_hex(&k.mu) }
    }
}

impl TryFrom<PrivateKeyWire> for PaillierPrivateKey {
    type Error = String;

    fn try_from(w: PrivateKeyWire) -> Result<Self, String> {
        Ok(PaillierPrivateKey {
            lambda: biguint_from_hex(&w.lambda)?,
            mu: biguint_from_hex(&w.mu)?,
        })
    }
}

/// A Paillier ciphertext; its wire form is a bare hex integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    value: BigUint,
}

impl Ciphertext {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn to_hex(&self) -> String {
        biguint_to_hex(&self.value)
    }

    pub fn from_hex(s: &str) -> Result<Self, PaillierError> {
        biguint_from_hex(s).map(|value| Ciphertext { value }).map_err(|_| {
            PaillierError::InvalidCiphertext
        })
    }
}

impl Serialize for Ciphertext {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Ciphertext {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Ciphertext::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

const SMALL_PRIMES: [u32; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];

/// Miller-Rabin probable-prime test with random bases.
fn is_probable_prime(n: &BigUint, rounds: usize, rng: &mut ChaCha8Rng) -> bool {
    for p in SMALL_PRIMES {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    if *n < BigUint::from(49u32) {
        return false;
    }
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().expect("n - 1 is nonzero");
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gen_prime(bits: u64, rng: &mut ChaCha8Rng) -> Result<BigUint, PaillierError> {
    // A random b-bit odd number is prime with probability ~ 2/(b ln 2);
    // 40·bits attempts make failure astronomically unlikely.
    let attempts = 40 * bits as usize;
    for _ in 0..attempts {
        let mut candidate = rng.gen_biguint(bits);
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, 40, rng) {
            return Ok(candidate);
        }
    }
    Err(PaillierError::PrimeGenFailed { bits, attempts })
}

fn mod_inverse(a: &BigUint, modulus: &BigUint) -> Option<BigUint> {
    let e = BigInt::from(a.clone()).extended_gcd(&BigInt::from(modulus.clone()));
    if !e.gcd.is_one() {
        return None;
    }
    let m = BigInt::from(modulus.clone());
    let mut x = e.x % &m;
    if x.is_negative() {
        x += &m;
    }
    x.to_biguint()
}

fn keypair_from_parts(
    p: &BigUint,
    q: &BigUint,
) -> Result<(PaillierPublicKey, PaillierPrivateKey), PaillierError> {
    let n = p * q;
    let one = BigUint::one();
    let phi = (p - &one) * (q - &one);
    if !n.gcd(&phi).is_one() {
        return Err(PaillierError::BadKeyMaterial("gcd(n, phi(n)) != 1".into()));
    }
    let lambda = (p - &one).lcm(&(q - &one));
    let public = PaillierPublicKey::from_n(n);
    let l = l_function(&public.g.modpow(&lambda, &public.n_squared), &public.n);
    let mu = mod_inverse(&l, &public.n)
        .ok_or_else(|| PaillierError::BadKeyMaterial("L(g^lambda) not invertible".into()))?;
    Ok((public, PaillierPrivateKey { lambda, mu }))
}

/// Generates a keypair from two fresh probable primes of `prime_bits` bits
/// each (Miller-Rabin, 40 rounds). Deterministic in the seed.
pub fn keygen(
    prime_bits: u64,
    seed: u64,
) -> Result<(PaillierPublicKey, PaillierPrivateKey), PaillierError> {
    assert!(prime_bits >= 16, "prime_bits must be at least 16");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x9A11);
    loop {
        let p = gen_prime(prime_bits, &mut rng)?;
        let q = gen_prime(prime_bits, &mut rng)?;
        if p == q {
            continue;
        }
        match keypair_from_parts(&p, &q) {
            Ok(pair) => return Ok(pair),
            // Unlucky prime pair (n shares a factor with phi); redraw.
            Err(PaillierError::BadKeyMaterial(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Builds a keypair from two explicit primes; intended for tiny exhaustive
/// tests such as `p = 5, q = 7` giving `n = 35`, `λ = lcm(4, 6) = 12`.
pub fn from_primes(
    p: u64,
    q: u64,
) -> Result<(PaillierPublicKey, PaillierPrivateKey), PaillierError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (pb, qb) = (BigUint::from(p), BigUint::from(q));
    if p == q
        || !is_probable_prime(&pb, 40, &mut rng)
        || !is_probable_prime(&qb, 40, &mut rng)
    {
        return Err(PaillierError::BadKeyMaterial("need two distinct primes".into()));
    }
    keypair_from_parts(&pb, &qb)
}

fn l_function(x: &BigUint, n: &BigUint) -> BigUint {
    (x - BigUint::one()) / n
}

/// Encrypts `m ∈ Z_n` with fresh randomness `r` coprime to `n`:
/// `c = g^m · r^n mod n²`.
pub fn encrypt<R: RngCore>(
    public: &PaillierPublicKey,
    m: &BigUint,
    rng: &mut R,
) -> Result<Ciphertext, PaillierError> {
    if m >= &public.n {
        return Err(PaillierError::PlaintextOutOfRange);
    }
    let r = loop {
        let candidate = rng.gen_biguint_range(&BigUint::one(), &public.n);
        if candidate.gcd(&public.n).is_one() {
            break candidate;
        }
    };
    // g = n + 1 makes g^m = 1 + mn mod n².
    let g_m = (BigUint::one() + m * &public.n) % &public.n_squared;
    let value = g_m * r.modpow(&public.n, &public.n_squared) % &public.n_squared;
    Ok(Ciphertext { value })
}

/// Decrypts `c` to its plaintext in `Z_n`: `m = L(c^λ mod n²) · μ mod n`.
pub fn decrypt(
    private: &PaillierPrivateKey,
    public: &PaillierPublicKey,
    c: &Ciphertext,
) -> Result<BigUint, PaillierError> {
    if c.value.is_zero() || c.value >= public.n_squared || !c.value.gcd(&public.n).is_one() {
        return Err(PaillierError::InvalidCiphertext);
    }
    let l = l_function(&c.value.modpow(&private.lambda, &public.n_squared), &public.n);
    Ok(l * &private.mu % &public.n)
}

/// Decryption arithmetic with no validity checks, on a raw residue that may
/// not even belong to this key: what an attacker gets when forcing the wrong
/// private key onto an observed ciphertext.
pub(crate) fn raw_decrypt(
    private: &PaillierPrivateKey,
    public: &PaillierPublicKey,
    value: &BigUint,
) -> BigUint {
    let c = value % &public.n_squared;
    let l = l_function(&c.modpow(&private.lambda, &public.n_squared), &public.n);
    l * &private.mu % &public.n
}

/// Homomorphic addition: the product of ciphertexts decrypts to
/// `(m₁ + m₂) mod n`.
pub fn hom_add(public: &PaillierPublicKey, c1: &Ciphertext, c2: &Ciphertext) -> Ciphertext {
    Ciphertext { value: &c1.value * &c2.value % &public.n_squared }
}

/// Homomorphic scaling: `c^a` decrypts to `a·m mod n`. Negative reals enter
/// as their codec images in `Z_n`, so `a` itself is always nonnegative.
pub fn hom_scale(public: &PaillierPublicKey, c: &Ciphertext, a: &BigUint) -> Ciphertext {
    Ciphertext { value: c.value.modpow(a, &public.n_squared) }
}

/// Fixed-point embedding of signed reals into `Z_n`: magnitudes scale by
/// `2^frac_bits` and negatives map to `n − |m|`. The representable range
/// `|x| < n / 2^(2f+2)` leaves room for one multiplication of two encoded
/// quantities plus the sign bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPointCodec {
    frac_bits: u32,
    modulus: BigUint,
}

impl FixedPointCodec {
    pub fn new(frac_bits: u32, public: &PaillierPublicKey) -> Self {
        FixedPointCodec { frac_bits, modulus: public.n.clone() }
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    /// Strict bound on encodable magnitudes.
    pub fn max_abs(&self) -> f64 {
        let shifted = &self.modulus >> (2 * self.frac_bits + 2);
        shifted.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Absolute decode error bound for a single encoded value.
    pub fn resolution(&self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn encode(&self, x: f64) -> Result<BigUint, PaillierError> {
        let bound = self.max_abs();
        if !x.is_finite() || x.abs() >= bound {
            return Err(PaillierError::ValueOutOfRange(x, bound));
        }
        let scaled = (x.abs() * (self.frac_bits as f64).exp2()).round();
        let magnitude = BigUint::from_f64(scaled)
            .ok_or(PaillierError::ValueOutOfRange(x, bound))?;
        if x < 0.0 && !magnitude.is_zero() {
            Ok(&self.modulus - magnitude)
        } else {
            Ok(magnitude)
        }
    }

    /// Decodes a plaintext carrying `scale_levels` accumulated fixed-point
    /// factors (1 for a plain value, 2 after one homomorphic scaling).
    pub fn decode(&self, m: &BigUint, scale_levels: u32) -> f64 {
        assert!((1..=2).contains(&scale_levels));
        let half = &self.modulus >> 1;
        let (negative, magnitude) =
            if m > &half { (true, &self.modulus - m) } else { (false, m.clone()) };
        let shift = self.frac_bits * scale_levels;
        // Split exactly so the fractional part keeps full precision even
        // when the raw integer exceeds f64's mantissa.
        let whole = &magnitude >> shift;
        let frac = &magnitude - (&whole << shift);
        let value = whole.to_f64().unwrap_or(f64::INFINITY)
            + frac.to_f64().unwrap_or(0.0) / (shift as f64).exp2();
        if negative {
            -value
        } else {
            value
        }
    }
}
