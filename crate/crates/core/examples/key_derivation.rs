//! Session-key derivation from a secret payload and a prompt.
//!
//! Prompts that differ only in case or whitespace derive the same keys.

use avbind::keyring::{derive_session_key, normalize_prompt, SecretPayload};

fn main() -> avbind::Result<()> {
    let secret = SecretPayload::from_hex("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f")?;
    let prompts = ["A dog running on the beach", "  a DOG   running on the beach\n"];
    for prompt in prompts {
        let keys = derive_session_key(&secret, prompt);
        println!("prompt      {prompt:?} -> {:?}", normalize_prompt(prompt));
        println!("  K_sess    {}", hex::encode(keys.session_key));
        println!("  video     {}", hex::encode(keys.subkey_video));
        println!("  audio     {}", hex::encode(keys.subkey_audio));
        println!("  shared    {:016x}", keys.shared_seed);
    }
    let other = derive_session_key(&secret, "a cat running on the beach");
    println!("different prompt K_sess {}", hex::encode(other.session_key));
    Ok(())
}
