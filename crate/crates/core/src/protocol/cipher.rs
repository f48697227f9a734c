//! Pluggable encryption used by the simulated parties.
//!
//! [`KeyedXorCipher`] is a deterministic stand-in: a SHA-256 keystream with
//! a truncated SHA-256 tag. Its "public" key contains the secret, so it
//! offers no confidentiality against anyone holding the public key. The
//! simulator only relies on the structural contract: a message is readable
//! by whoever holds the matching private key and by nobody who merely sees
//! the ciphertext.

use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const KEY_ID_LEN: usize = 8;
pub const NONCE_LEN: usize = 16;
pub const TAG_LEN: usize = 16;
const SECRET_LEN: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicKey(pub Vec<u8>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrivateKey(pub Vec<u8>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

pub trait CipherScheme {
    fn keygen(&self, rng: &mut dyn RngCore) -> KeyPair;
    fn encrypt(&self, key: &PublicKey, message: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>>;
    fn decrypt(&self, key: &PrivateKey, ciphertext: &[u8]) -> Result<Vec<u8>>;
}

/// Layout: `key_id ‖ nonce ‖ body ‖ tag`.
#[derive(Clone, Copy, Debug, Default)]
pub struct KeyedXorCipher;

fn split_key(bytes: &[u8]) -> Result<(&[u8], &[u8])> {
    if bytes.len() != KEY_ID_LEN + SECRET_LEN {
        return Err(Error::MalformedCiphertext(format!("key has {} bytes", bytes.len())));
    }
    Ok(bytes.split_at(KEY_ID_LEN))
}

fn keystream_xor(secret: &[u8], nonce: &[u8], data: &mut [u8]) {
    for (block, chunk) in data.chunks_mut(32).enumerate() {
        let pad = Sha256::new()
            .chain_update(secret)
            .chain_update(nonce)
            .chain_update((block as u64).to_le_bytes())
            .finalize();
        for (b, p) in chunk.iter_mut().zip(pad.iter()) {
            *b ^= p;
        }
    }
}

fn tag(secret: &[u8], nonce: &[u8], body: &[u8]) -> [u8; TAG_LEN] {
    let digest = Sha256::new()
        .chain_update(b"tag")
        .chain_update(secret)
        .chain_update(nonce)
        .chain_update(body)
        .finalize();
    let mut out = [0u8; TAG_LEN];
    out.copy_from_slice(&digest[..TAG_LEN]);
    out
}

impl CipherScheme for KeyedXorCipher {
    fn keygen(&self, rng: &mut dyn RngCore) -> KeyPair {
        let mut secret = [0u8; SECRET_LEN];
        rng.fill_bytes(&mut secret);
        let id = Sha256::digest(secret);
        let mut key = id[..KEY_ID_LEN].to_vec();
        key.extend_from_slice(&secret);
        KeyPair {
            public: PublicKey(key.clone()),
            private: PrivateKey(key),
        }
    }

    fn encrypt(&self, key: &PublicKey, message: &[u8], rng: &mut dyn RngCore) -> Result<Vec<u8>> {
        let (id, secret) = split_key(&key.0)?;
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut nonce);
        let mut body = message.to_vec();
        keystream_xor(secret, &nonce, &mut body);
        let t = tag(secret, &nonce, &body);
        let mut out = Vec::with_capacity(KEY_ID_LEN + NONCE_LEN + body.len() + TAG_LEN);
        out.extend_from_slice(id);
        out.extend_from_slice(&nonce);
        out.extend_from_slice(&body);
        out.extend_from_slice(&t);
        Ok(out)
    }

    fn decrypt(&self, key: &PrivateKey, ciphertext: &[u8]) -> Result<Vec<u8>> {
        let (id, secret) = split_key(&key.0)?;
        if ciphertext.len() < KEY_ID_LEN + NONCE_LEN + TAG_LEN {
            return Err(Error::MalformedCiphertext(format!("only {} bytes", ciphertext.len())));
        }
        if &ciphertext[..KEY_ID_LEN] != id {
            return Err(Error::MalformedCiphertext("encrypted under another key".into()));
        }
        let (head, t) = ciphertext.split_at(ciphertext.len() - TAG_LEN);
        let nonce = &head[KEY_ID_LEN..KEY_ID_LEN + NONCE_LEN];
        let body = &head[KEY_ID_LEN + NONCE_LEN..];
        if tag(secret, nonce, body) != t {
            return Err(Error::MalformedCiphertext("authentication tag mismatch".into()));
        }
        let mut plain = body.to_vec();
        keystream_xor(secret, nonce, &mut plain);
        Ok(plain)
    }
}
