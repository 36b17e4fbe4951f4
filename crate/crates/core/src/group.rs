//! Prime-order subgroups of `Z_p*` standing in for the signature curve.
//!
//! A group is the order-`q` subgroup of `Z_p*` with `p = k*q + 1` prime. The
//! group law is written additively in method names (`add`, `pk_ec`) to match
//! how public keys are combined during key derivation, but is realized as
//! modular multiplication.
//!
//! Scalars encode as big-endian bytes padded to the byte width of `p`. Points
//! encode as one tag byte followed by the same width, so a point encoding is
//! always exactly one byte longer than a scalar encoding.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hash::{h512_parts, Digest32};

/// Tag byte prepended to every point encoding.
pub const POINT_TAG: u8 = 0x04;

/// Largest order for which exhaustive discrete log is offered.
pub const QUANTUM_ORDER_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupMode {
    Secure,
    QuantumVulnerable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("order {0} is not prime")]
    OrderNotPrime(u64),
    #[error("order {0} is too large for a toy group")]
    OrderTooLarge(u64),
    #[error("no prime modulus found for order {0}")]
    NoModulus(u64),
    #[error("quantum-vulnerable mode requires order <= 2^24")]
    NotInvertibleScale,
    #[error("discrete log oracle refused: group is in secure mode")]
    OutOfScale,
    #[error("point is not a group element")]
    NotInGroup,
}

/// Parameters of a concrete group.
#[derive(Clone, PartialEq, Eq)]
pub struct GroupParams {
    modulus: BigUint,
    order: BigUint,
    generator: BigUint,
    mode: GroupMode,
    scalar_len: usize,
    small: Option<Small>,
}

/// u64 shadow of the parameters when `p < 2^63`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Small {
    p: u64,
    q: u64,
    g: u64,
}

impl GroupParams {
    pub fn modulus(&self) -> &BigUint {
        &self.modulus
    }

    pub fn order(&self) -> &BigUint {
        &self.order
    }

    pub fn generator(&self) -> &BigUint {
        &self.generator
    }

    pub fn mode(&self) -> GroupMode {
        self.mode
    }

    /// Bit length of the modulus `p`.
    pub fn modulus_bits(&self) -> u64 {
        self.modulus.bits()
    }

    /// `L_sk`: byte length of a scalar encoding.
    pub fn scalar_len(&self) -> usize {
        self.scalar_len
    }

    /// `L_pk`: byte length of a point encoding.
    pub fn point_len(&self) -> usize {
        self.scalar_len + 1
    }
}

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams")
            .field("modulus_bits", &self.modulus_bits())
            .field("order_bits", &self.order.bits())
            .field("mode", &self.mode)
            .finish()
    }
}

/// Declarative group choice, as written in scenario configs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupSpec {
    /// Subgroup of the given prime order.
    Toy { q: u64 },
    /// Largest usable prime order below `2^bits`.
    ToyBits { bits: u32 },
    /// Seeded search for a group whose modulus has exactly `bits` bits.
    Generated { bits: u32, seed: u64 },
    /// 2048-bit safe-prime group.
    Secure,
}

impl GroupSpec {
    pub fn build(&self) -> Result<Group, GroupError> {
        match *self {
            GroupSpec::Toy { q } => Group::toy(q),
            GroupSpec::ToyBits { bits } => Group::toy_bits(bits),
            GroupSpec::Generated { bits, seed } => Ok(Group::generated(bits, seed)),
            GroupSpec::Secure => Ok(Group::secure()),
        }
    }
}

/// A scalar in `[0, q)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", self.0)
    }
}

/// An element of the order-`q` subgroup.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point(BigUint);

impl Point {
    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({})", self.0)
    }
}

/// Pre-quantum (Schnorr-style) signature bytes: `challenge(32) || response(L_sk)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PreQuantumSignature(pub Vec<u8>);

impl fmt::Debug for PreQuantumSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PreQuantumSignature({})", crate::hash::to_hex(&self.0))
    }
}

/// Shared handle to group parameters. Cheap to clone.
#[derive(Clone, PartialEq, Eq)]
pub struct Group(Arc<GroupParams>);

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::ops::Deref for Group {
    type Target = GroupParams;
    fn deref(&self) -> &GroupParams {
        &self.0
    }
}

const RFC3526_2048: &str = "\
FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74\
020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437\
4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED\
EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05\
98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB\
9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B\
E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718\
3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

impl Group {
    fn from_parts(modulus: BigUint, order: BigUint, generator: BigUint, mode: GroupMode) -> Self {
        let scalar_len = modulus.bits().div_ceil(8) as usize;
        let small = match (modulus.to_u64(), order.to_u64(), generator.to_u64()) {
            (Some(p), Some(q), Some(g)) if p < (1 << 63) => Some(Small { p, q, g }),
            _ => None,
        };
        Group(Arc::new(GroupParams {
            modulus,
            order,
            generator,
            mode,
            scalar_len,
            small,
        }))
    }

    /// Subgroup of prime order `q` in quantum-vulnerable mode. The modulus is
    /// the smallest prime of the form `k*q + 1` with even `k`.
    pub fn toy(q: u64) -> Result<Self, GroupError> {
        if q > (1 << 40) {
            return Err(GroupError::OrderTooLarge(q));
        }
        if !is_prime_u64(q) || q < 3 {
            return Err(GroupError::OrderNotPrime(q));
        }
        let mut k = 2u64;
        let p = loop {
            let p = k * q + 1;
            if is_prime_u64(p) {
                break p;
            }
            k += 2;
            if k > 1 << 16 {
                return Err(GroupError::NoModulus(q));
            }
        };
        let g = (2u64..)
            .map(|h| pow_mod_u64(h, k, p))
            .find(|&g| g != 1)
            .expect("some base has nontrivial projection");
        let mode = if q <= QUANTUM_ORDER_LIMIT {
            GroupMode::QuantumVulnerable
        } else {
            GroupMode::Secure
        };
        Ok(Self::from_parts(
            BigUint::from(p),
            BigUint::from(q),
            BigUint::from(g),
            mode,
        ))
    }

    /// Toy group with the largest prime order below `2^bits`.
    pub fn toy_bits(bits: u32) -> Result<Self, GroupError> {
        let bits = bits.clamp(3, 40);
        let mut q = (1u64 << bits) - 1;
        loop {
            if is_prime_u64(q) {
                if let Ok(g) = Self::toy(q) {
                    return Ok(g);
                }
            }
            q -= 2;
        }
    }

    /// Seeded search for a group whose modulus has exactly `bits` bits
    /// (`bits >= 32`). Always secure mode.
    pub fn generated(bits: u32, seed: u64) -> Self {
        let bits = bits.max(32) as u64;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        loop {
            let q_bits = bits - 12;
            let mut q = rng.gen_biguint(q_bits);
            q.set_bit(q_bits - 1, true);
            q.set_bit(0, true);
            if !is_probable_prime(&q) {
                continue;
            }
            for k in (2048u32..4096).step_by(2) {
                let p: BigUint = &q * k + 1u32;
                if p.bits() != bits || !is_probable_prime(&p) {
                    continue;
                }
                let kb = BigUint::from(k);
                let mut h = BigUint::from(2u32);
                let g = loop {
                    let g = h.modpow(&kb, &p);
                    if !g.is_one() {
                        break g;
                    }
                    h += 1u32;
                };
                return Self::from_parts(p, q, g, GroupMode::Secure);
            }
        }
    }

    /// The 2048-bit MODP safe prime `p = 2q + 1` with generator 4.
    pub fn secure() -> Self {
        let p = BigUint::parse_bytes(RFC3526_2048.as_bytes(), 16).expect("valid hex");
        let q = (&p - 1u32) >> 1;
        Self::from_parts(p, q, BigUint::from(4u32), GroupMode::Secure)
    }

    /// Same parameters with a different mode.
    pub fn with_mode(&self, mode: GroupMode) -> Result<Self, GroupError> {
        if mode == GroupMode::QuantumVulnerable
            && self.order > BigUint::from(QUANTUM_ORDER_LIMIT)
        {
            return Err(GroupError::NotInvertibleScale);
        }
        let mut params = (*self.0).clone();
        params.mode = mode;
        Ok(Group(Arc::new(params)))
    }

    pub fn params(&self) -> &GroupParams {
        &self.0
    }

    // ---- scalars ----

    pub fn scalar(&self, v: u64) -> Scalar {
        Scalar(BigUint::from(v) % &self.order)
    }

    /// Interpret big-endian bytes as an integer and reduce mod `q`.
    pub fn scalar_reduce(&self, bytes: &[u8]) -> Scalar {
        Scalar(BigUint::from_bytes_be(bytes) % &self.order)
    }

    pub fn random_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_below(&self.order))
    }

    pub fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.order)
    }

    pub fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.order)
    }

    pub fn scalar_neg(&self, a: &Scalar) -> Scalar {
        if a.0.is_zero() {
            a.clone()
        } else {
            Scalar(&self.order - &a.0)
        }
    }

    pub fn encode_scalar(&self, s: &Scalar) -> Vec<u8> {
        pad_be(&s.0, self.scalar_len)
    }

    pub fn decode_scalar(&self, bytes: &[u8]) -> Option<Scalar> {
        if bytes.len() != self.scalar_len {
            return None;
        }
        let v = BigUint::from_bytes_be(bytes);
        (v < self.order).then_some(Scalar(v))
    }

    // ---- points ----

    pub fn identity(&self) -> Point {
        Point(BigUint::one())
    }

    pub fn generator_point(&self) -> Point {
        Point(self.generator.clone())
    }

    /// `PK^EC(sk) = sk . G`.
    pub fn pk_ec(&self, sk: &Scalar) -> Point {
        Point(self.pow(&self.generator, &sk.0))
    }

    pub fn add(&self, a: &Point, b: &Point) -> Point {
        match self.small {
            Some(s) => {
                let (x, y) = (a.0.to_u64().unwrap(), b.0.to_u64().unwrap());
                Point(BigUint::from(mul_mod_u64(x, y, s.p)))
            }
            None => Point((&a.0 * &b.0) % &self.modulus),
        }
    }

    pub fn mul(&self, p: &Point, k: &Scalar) -> Point {
        Point(self.pow(&p.0, &k.0))
    }

    pub fn neg(&self, p: &Point) -> Point {
        let e = &self.order - 1u32;
        Point(self.pow(&p.0, &e))
    }

    pub fn encode_point(&self, p: &Point) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.point_len());
        out.push(POINT_TAG);
        out.extend_from_slice(&pad_be(&p.0, self.scalar_len));
        out
    }

    /// Decode and check subgroup membership.
    pub fn decode_point(&self, bytes: &[u8]) -> Option<Point> {
        if bytes.len() != self.point_len() || bytes[0] != POINT_TAG {
            return None;
        }
        let v = BigUint::from_bytes_be(&bytes[1..]);
        if v.is_zero() || v >= self.modulus {
            return None;
        }
        self.pow(&v, &self.order).is_one().then_some(Point(v))
    }

    fn pow(&self, base: &BigUint, exp: &BigUint) -> BigUint {
        match self.small {
            Some(s) => {
                let b = base.to_u64().expect("element below small modulus");
                // Fermat reduction is valid for any unit, member of the subgroup or not.
                let e = exp
                    .to_u64()
                    .unwrap_or_else(|| (exp % (s.p - 1)).to_u64().unwrap());
                BigUint::from(pow_mod_u64(b, e, s.p))
            }
            None => base.modpow(exp, &self.modulus),
        }
    }

    // ---- quantum oracle ----

    /// Brute-force discrete log. Only available in quantum-vulnerable mode.
    pub fn quantum_invert(&self, pk: &Point) -> Result<Scalar, GroupError> {
        if self.mode != GroupMode::QuantumVulnerable {
            return Err(GroupError::OutOfScale);
        }
        let s = self.small.ok_or(GroupError::OutOfScale)?;
        let target = pk.0.to_u64().ok_or(GroupError::NotInGroup)?;
        let mut acc = 1u64;
        for k in 0..s.q {
            if acc == target {
                return Ok(Scalar(BigUint::from(k)));
            }
            acc = mul_mod_u64(acc, s.g, s.p);
        }
        Err(GroupError::NotInGroup)
    }

    // ---- pre-quantum signatures ----

    fn challenge(&self, r: &Point, pk: &Point, msg: &[u8]) -> Digest32 {
        h512_parts(&[
            b"schnorr/challenge",
            &self.encode_point(r),
            &self.encode_point(pk),
            msg,
        ])
        .left()
    }

    /// Deterministic Schnorr signature. The nonce is derived from the secret and
    /// the message and is never zero.
    pub fn prequantum_sign(&self, sk: &Scalar, msg: &[u8]) -> PreQuantumSignature {
        let pk = self.pk_ec(sk);
        let seed = h512_parts(&[b"schnorr/nonce", &self.encode_scalar(sk), msg]);
        let q1 = &self.order - 1u32;
        let k = Scalar(BigUint::from_bytes_be(seed.digest()) % &q1 + 1u32);
        let r = self.pk_ec(&k);
        let e = self.challenge(&r, &pk, msg);
        let e_scalar = self.scalar_reduce(&e);
        let s = self.scalar_add(&k, &self.scalar_mul(&e_scalar, sk));
        let mut bytes = e.to_vec();
        bytes.extend_from_slice(&self.encode_scalar(&s));
        PreQuantumSignature(bytes)
    }

    /// Never panics; malformed signatures verify as false.
    pub fn prequantum_verify(&self, pk: &Point, msg: &[u8], sig: &PreQuantumSignature) -> bool {
        if sig.0.len() != 32 + self.scalar_len {
            return false;
        }
        let Some(s) = self.decode_scalar(&sig.0[32..]) else {
            return false;
        };
        let e = &sig.0[..32];
        let e_scalar = self.scalar_reduce(e);
        let r = self.add(
            &self.pk_ec(&s),
            &self.mul(pk, &self.scalar_neg(&e_scalar)),
        );
        self.challenge(&r, pk, msg) == e
    }
}

fn pad_be(v: &BigUint, len: usize) -> Vec<u8> {
    let raw = v.to_bytes_be();
    let raw = if v.is_zero() { Vec::new() } else { raw };
    assert!(raw.len() <= len, "value wider than encoding");
    let mut out = vec![0u8; len - raw.len()];
    out.extend_from_slice(&raw);
    out
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for b in BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for a in BASES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Miller-Rabin with fixed bases; probabilistic above 2^64.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    if n.is_even() {
        return false;
    }
    let one = BigUint::one();
    let n1 = n - 1u32;
    let r = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> r;
    'witness: for a in [2u32, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53] {
        let a = BigUint::from(a);
        if (n % &a).is_zero() {
            return false;
        }
        let mut x = a.modpow(&d, n);
        if x == one || x == n1 {
            continue;
        }
        for _ in 1..r {
            x = x.modpow(&BigUint::from(2u32), n);
            if x == n1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
