use super::DistortionKind;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-task seed for a sweep cell. The tuple is encoded as
/// `"{master}\x1f{pair_id}\x1f{kind}\x1f{degree_index}"`, hashed with 64-bit
/// FNV-1a and passed through the SplitMix64 finalizer, so the result depends
/// only on the tuple and never on scheduling order.
pub fn derive_seed(master: u64, pair_id: &str, kind: DistortionKind, degree_index: usize) -> u64 {
    let text = format!("{master}\x1f{pair_id}\x1f{}\x1f{degree_index}", kind.name());
    mix64(fnv1a(text.as_bytes()))
}
