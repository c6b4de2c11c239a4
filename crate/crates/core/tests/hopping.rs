use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simbt_core::baseband::{AfhMap, ChannelClass};
use simbt_core::hopping::{adaptive_hop, basic_hop, predict_sequence, HopAddress, HopKernel};

/// Second coding of the connection-state kernel, written from the stage
/// descriptions with explicit bit vectors rather than packed arithmetic.
mod oracle {
    fn bits(v: u64, n: usize) -> Vec<u8> {
        (0..n).map(|i| ((v >> i) & 1) as u8).collect()
    }

    fn val(b: &[u8]) -> u32 {
        b.iter().rev().fold(0, |acc, x| (acc << 1) | *x as u32)
    }

    pub fn hop(addr: u32, clock27: u32, used: Option<&[u8]>) -> u8 {
        let a28 = bits(addr as u64, 28);
        // Clock bits indexed by their CLK number: clk[1] is CLK1.
        let mut clk = vec![0u8];
        clk.extend(bits(clock27 as u64, 27));

        let x = val(&clk[2..=6]);
        let y1 = clk[1] as u32;
        let a: Vec<u8> = (0..5).map(|i| a28[23 + i] ^ clk[21 + i]).collect();
        let b = val(&a28[19..=22]);
        let c: Vec<u8> = (0..5).map(|i| a28[2 * i] ^ clk[16 + i]).collect();
        let d: Vec<u8> = (0..9).map(|i| a28[10 + i] ^ clk[7 + i]).collect();
        let e: u32 = (0..7).map(|i| (a28[2 * i + 1] as u32) << i).sum();
        let upper = val(&clk[7..=27]);

        let z_in = ((x + val(&a)) % 32) ^ b;
        let mut z = bits(z_in as u64, 5);
        let mut p = d.clone();
        p.extend(c.iter().map(|ci| ci ^ y1 as u8));
        let pairs = [
            (0, 1),
            (2, 3),
            (1, 2),
            (3, 4),
            (0, 4),
            (1, 3),
            (0, 2),
            (3, 4),
            (1, 4),
            (0, 3),
            (2, 4),
            (1, 3),
            (0, 3),
            (1, 2),
        ];
        for i in (0..14).rev() {
            if p[i] == 1 {
                z.swap(pairs[i].0, pairs[i].1);
            }
        }
        let perm = val(&z);
        let f = (16 * upper) % 79;
        let idx = (perm + e + f + 32 * y1) % 79;
        let bank: Vec<u8> = (0..79).map(|i| ((2 * i) % 79) as u8).collect();
        let ch = bank[idx as usize];
        match used {
            Some(u) if !u.contains(&ch) => {
                let n = u.len() as u32;
                u[((perm + e + (16 * upper) % n + 32 * y1) % n) as usize]
            }
            _ => ch,
        }
    }
}

const ADDR: HopAddress = HopAddress::new(0xfb, 0xfd7fd1);

#[test]
fn kernel_agrees_with_bitwise_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let map = AfhMap::with_bad(24..=45).unwrap();
    let used = map.used_channels();
    for _ in 0..20_000 {
        let addr = HopAddress::from_raw(rng.gen());
        let k: u32 = rng.gen_range(0..1 << 27);
        assert_eq!(
            basic_hop(HopKernel::BasicSpec, addr, k),
            oracle::hop(addr.value(), k, None)
        );
        assert_eq!(
            adaptive_hop(HopKernel::BasicSpec, addr, k, &map).unwrap(),
            oracle::hop(addr.value(), k, Some(&used))
        );
    }
}

#[test]
fn basic_hopping_is_near_uniform() {
    for kernel in [HopKernel::BasicSpec, HopKernel::ReferenceHash] {
        let mut hist = [0u32; 79];
        let n = 1u32 << 16;
        for k in 0..n {
            hist[basic_hop(kernel, ADDR, 0x40_0000 + k) as usize] += 1;
        }
        let expect = n as f64 / 79.0;
        for (ch, h) in hist.iter().enumerate() {
            let r = *h as f64 / expect;
            assert!((0.8..=1.2).contains(&r), "{kernel:?} channel {ch}: ratio {r}");
        }
    }
}

#[test]
fn adaptive_hopping_never_selects_bad_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let mut entries = [ChannelClass::Unknown; 79];
        let nbad = rng.gen_range(0..=59);
        let mut chans: Vec<u8> = (0..79).collect();
        for i in 0..nbad {
            let j = rng.gen_range(i..79);
            chans.swap(i, j);
            entries[chans[i] as usize] = ChannelClass::Bad;
        }
        let map = AfhMap::from_entries(entries).unwrap();
        let addr = HopAddress::from_raw(rng.gen());
        let start: u32 = rng.gen_range(0..1 << 27);
        let seq = predict_sequence(HopKernel::BasicSpec, addr, start, Some(&map), 5000).unwrap();
        assert!(seq.iter().all(|c| map.is_usable(*c)));
    }
}

#[test]
fn masked_block_is_avoided() {
    let map = AfhMap::with_bad(30..=50).unwrap();
    let seq = predict_sequence(HopKernel::BasicSpec, ADDR, 0x12_3456, Some(&map), 100_000).unwrap();
    assert!(seq.iter().all(|c| !(30..=50).contains(c)));
}

#[test]
fn twenty_channel_set_is_fully_and_evenly_used() {
    let used: Vec<u8> = (0..79).filter(|c| c % 4 == 1).take(20).collect();
    let map = AfhMap::with_used(used.iter().copied()).unwrap();
    assert_eq!(map.usable_count(), 20);
    let n = 1u64 << 16;
    let seq = predict_sequence(HopKernel::BasicSpec, ADDR, 0, Some(&map), n).unwrap();
    let mut hist = [0u32; 79];
    for c in &seq {
        hist[*c as usize] += 1;
    }
    // Per second of slots each usable channel should be hit about 1600/20
    // times.
    for c in 0..79u8 {
        if used.contains(&c) {
            let per_second = hist[c as usize] as f64 * 1600.0 / n as f64;
            assert!((64.0..=96.0).contains(&per_second), "channel {c}: {per_second}/s");
        } else {
            assert_eq!(hist[c as usize], 0);
        }
    }
}

fn render_fixture(name: &str, map: Option<&AfhMap>, start: u32, len: u64) -> String {
    let seq = predict_sequence(HopKernel::BasicSpec, ADDR, start, map, len).unwrap();
    let map_desc = match map {
        None => "none".to_string(),
        Some(m) => format!(
            "bad:{}",
            m.bad_channels()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
    };
    let mut s = format!(
        "# {name}\n# kernel=BasicSpec addr=0x{:07x} start_clock27=0x{start:07x} map={map_desc} length={len}\n",
        ADDR.value()
    );
    for row in seq.chunks(16) {
        let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

fn check_fixture(file: &str, rendered: String) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(file);
    if std::env::var_os("SIMBT_BLESS").is_some() {
        fs::write(&path, &rendered).unwrap();
    }
    let golden = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(rendered, golden, "hop sequence drifted from {file}");
}

#[test]
fn golden_basic_sequence() {
    check_fixture("hop_basic.txt", render_fixture("basic hopping", None, 0x000_0000, 256));
}

#[test]
fn golden_adaptive_sequence() {
    let map = AfhMap::with_bad(24..=45).unwrap();
    check_fixture(
        "hop_afh_24_45.txt",
        render_fixture("adaptive hopping", Some(&map), 0x2a9_6ef2, 256),
    );
}
