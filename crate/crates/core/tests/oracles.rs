//! Values checked against independent computations.

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256, Sha512};

use fawkes::group::Group;
use fawkes::hash::{h512, sha256, to_hex};
use fawkes::hd::{child_hardened, child_nonhardened, derive, DerivationPath, DerivationStep, ExtendedSecretKey, Kdf, Seed};

fn sha512(parts: &[&[u8]]) -> [u8; 64] {
    let mut h = Sha512::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

fn be_pad(v: &BigUint, width: usize) -> Vec<u8> {
    let raw = v.to_bytes_be();
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    out
}

/// Independent child derivation: left 32 bytes mod q plus parent sk, right as chain code.
fn oracle_child(group: &Group, parent: &ExtendedSecretKey, material: &[u8], i: u32) -> (BigUint, [u8; 32]) {
    let d = sha512(&[&parent.chain_code, material, &i.to_be_bytes()]);
    let q = group.params().order();
    let sk = (BigUint::from_bytes_be(&d[..32]) + parent.sk.value()) % q;
    (sk, d[32..].try_into().unwrap())
}

fn parent(group: &Group, tag: u8) -> ExtendedSecretKey {
    Kdf::new(1).kdf(group, &Seed::new(vec![tag; 16], b"pw".to_vec()).unwrap())
}

#[test]
fn sha512_known_vectors() {
    assert_eq!(
        to_hex(h512(b"").digest()),
        "cf83e1357eefb8bdf1542850d66d8007d620e4050b5715dc83f4a921d36ce9ce\
         47d0d13c5d85f2b0ff8318d2877eec2f63b931bd47417a81a538327af927da3e"
    );
    assert_eq!(
        to_hex(h512(b"abc").digest()),
        "ddaf35a193617abacc417349ae20413112e6fa4e89a97ea20a9eeee64b55d39a\
         2192992a274fc1a836ba3c23a3feebbd454d4423643ce80e2a9ac94fa54ca49f"
    );
    let h = h512(b"abc");
    assert_eq!(&h.digest()[..32], &h.left());
    assert_eq!(&h.digest()[32..], &h.right());
}

#[test]
fn sha256_known_vector() {
    assert_eq!(
        to_hex(&sha256(b"abc")),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
    let direct: [u8; 32] = Sha256::digest(b"fawkes").into();
    assert_eq!(sha256(b"fawkes"), direct);
}

#[test]
fn pk_ec_is_modular_exponentiation() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for group in [Group::toy(101).unwrap(), Group::toy(8191).unwrap(), Group::toy_bits(20).unwrap()] {
        let p = group.params().modulus().clone();
        let gen = group.params().generator().clone();
        for _ in 0..32 {
            let sk = group.random_scalar(&mut rng);
            assert_eq!(group.pk_ec(&sk).value(), &gen.modpow(sk.value(), &p));
        }
    }
}

#[test]
fn q101_inverse_keys_sum_to_identity() {
    let g = Group::toy(101).unwrap();
    let sum = g.add(&g.pk_ec(&g.scalar(37)), &g.pk_ec(&g.scalar(64)));
    assert_eq!(sum, g.pk_ec(&g.scalar(0)));
    assert_eq!(sum.value(), &BigUint::from(1u8));
}

#[test]
fn point_and_scalar_encodings_by_hand() {
    let g = Group::toy_bits(20).unwrap();
    let sk = g.scalar(12_345);
    let pk = g.pk_ec(&sk);
    let width = g.params().scalar_len();
    let mut want = vec![0x04];
    want.extend(be_pad(pk.value(), width));
    assert_eq!(g.encode_point(&pk), want);
    assert_eq!(g.encode_scalar(&sk), be_pad(sk.value(), width));
    assert_eq!(g.encode_point(&pk).len(), g.encode_scalar(&sk).len() + 1);
}

#[test]
fn nonhardened_child_matches_hash_oracle() {
    let g = Group::toy_bits(20).unwrap();
    let par = parent(&g, 3);
    let pk = g.encode_point(&g.pk_ec(&par.sk));
    for i in [0u32, 1, 7, u32::MAX] {
        let c = child_nonhardened(&g, &par, i);
        let (sk, cc) = oracle_child(&g, &par, &pk, i);
        assert_eq!(c.sk.value(), &sk);
        assert_eq!(c.chain_code, cc);
    }
}

#[test]
fn hardened_child_matches_hash_oracle() {
    let g = Group::toy_bits(20).unwrap();
    let par = parent(&g, 4);
    let sk_bytes = g.encode_scalar(&par.sk);
    let c = child_hardened(&g, &par, 5);
    let (sk, cc) = oracle_child(&g, &par, &sk_bytes, 5);
    assert_eq!(c.sk.value(), &sk);
    assert_eq!(c.chain_code, cc);
}

#[test]
fn two_step_path_by_hand() {
    let g = Group::toy_bits(20).unwrap();
    let msk = parent(&g, 5);
    let path: DerivationPath = "m/2h/9".parse().unwrap();
    assert_eq!(path.steps(), &[DerivationStep::hardened(2), DerivationStep::normal(9)]);

    let (sk1, cc1) = oracle_child(&g, &msk, &g.encode_scalar(&msk.sk), 2);
    let mid = ExtendedSecretKey {
        sk: g.scalar_reduce(&be_pad(&sk1, 32)),
        chain_code: cc1,
    };
    let pk1 = g.encode_point(&g.pk_ec(&mid.sk));
    let (sk2, cc2) = oracle_child(&g, &mid, &pk1, 9);
    let got = derive(&g, &msk, &path);
    assert_eq!(got.sk.value(), &sk2);
    assert_eq!(got.chain_code, cc2);
}

#[test]
fn kdf_matches_reference_loop() {
    let g = Group::toy_bits(20).unwrap();
    let seed = Seed::new((0u8..32).collect(), b"correct horse".to_vec()).unwrap();
    let mut x = seed.kdf_input();
    for _ in 0..2048 {
        x = sha512(&[&x]).to_vec();
    }
    let key = Kdf::default().kdf(&g, &seed);
    let q = g.params().order();
    assert_eq!(key.sk.value(), &(BigUint::from_bytes_be(&x[..32]) % q));
    assert_eq!(key.chain_code[..], x[32..]);
    assert_eq!(Kdf::default().kdf_pre(&seed).len(), 64);
}

#[test]
fn single_iteration_kdf_is_one_hash() {
    let g = Group::toy_bits(20).unwrap();
    let seed = Seed::new(vec![9; 16], Vec::new()).unwrap();
    let d = sha512(&[&[9u8; 16]]);
    let key = Kdf::new(1).kdf(&g, &seed);
    assert_eq!(key.sk.value(), &(BigUint::from_bytes_be(&d[..32]) % g.params().order()));
    assert_eq!(key.chain_code[..], d[32..]);
}
